#include "cqa/datagen.hpp"

#include "cqa/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_set>

namespace cqa {

namespace {

struct CatalogText {
  const char *name;
  const char *query;
  bool r4_compound_key; // R4(y, v, w) keyed on its first two attributes
};

constexpr CatalogText synthetic[] = {
    {"q1", "q1(z) :- R1(x, y, z), R2(y, v, w)", false},
    {"q2", "q2(z, w) :- R1(x, y, z), R2(y, v, w)", false},
    {"q3", "q3(z) :- R1(x, y, z), R3(y, v), R2(v, u, d)", false},
    {"q4", "q4(z, d) :- R1(x, y, z), R3(y, v), R2(v, u, d)", false},
    {"q5", "q5(z) :- R1(x, y, z), R4(y, v, w)", true},
    {"q6", "q6(z) :- R1(x, y, z), R2(x2, y, w), R5(x, y, d)", false},
    {"q7", "q7(z) :- R1(x, y, z), R2(y, x, w), R5(x, y, d)", false},
    {"q8", "q8(z, w) :- R1(x, y, z), R2(y, x, w)", false},
    {"q9", "q9(z) :- R1(x, y, z), R2(y, x, w), R4(y, u, d)", false},
    {"q10", "q10(z, w, d) :- R1(x, y, z), R2(y, x, w), R4(y, u, d)", false},
    {"q11", "q11(z) :- R1(x, y, z), R2(y, x, w)", false},
    {"q12", "q12(v, d) :- R3(x, y), R6(y, z), R1(z, x, d), R4(x, u, v)", true},
    {"q13", "q13(v) :- R3(x, y), R6(y, z), R7(z, x), R4(x, u, v)", true},
    {"q14", "q14(d) :- R3(x, y), R6(y, z), R1(z, x, d), R7(x, u)", false},
    {"q15", "q15(z) :- R1(x, y, z), R2(x2, y, w)", false},
    {"q16", "q16(z, w) :- R1(x, y, z), R2(x2, y, w)", false},
    {"q17", "q17(z) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d)", false},
    {"q18", "q18(z, w) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d)", false},
    {"q19", "q19(z, w, d) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d)", false},
    {"q20", "q20(z) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d), R3(u, v)", false},
    {"q21", "q21(z, w) :- R1(x, y, z), R2(x2, y, w), R4(y, u, d), R3(u, v)", false},
};

constexpr CatalogText restaurant[] = {
    {"Q1", "Q1() :- NY_Rest(x, y, z, w, v), CH_Rest(x, y2, z2, w2, v2)", false},
    {"Q2", "Q2(x) :- NY_Rest(x, y, z, w, v), CH_Rest(x, y2, z2, w2, v2)", false},
    {"Q3",
     "Q3(x) :- NY_Rest(x, y, z, w, v), CH_Rest(x, y2, z2, w2, v2), NY_Insp(y, q, r, s, t), "
     "CH_Insp(y2, q2, r, s2, t2)",
     false},
    {"Q4", "Q4(x, y) :- CH_Rest(x, y, z, w, v), CH_Insp(y, q, r, s, 'Pass')", false},
    {"Q5",
     "Q5(x) :- CH_Rest(x, y, z, w, v), CH_Insp(y, q, r, s, 'Fail') ; "
     "Q5(x) :- NY_Rest(x, y, z, w, v), NY_Insp(y, q, r, s, 'Fail')",
     false},
    {"Q6",
     "Q6(x, v) :- CH_Rest(x, y, z, w, v), NY_Rest(x, y2, z2, w2, v2), NY_Insp(y2, 'Not Critical', q, r, s)",
     false},
};

constexpr const char *restaurant_schema =
    "NY_Insp(LicenseNo* text, Risk text, InspDate* text, InspType* text, Result text)\n"
    "NY_Rest(Name text, LicenseNo* text, Cuisine text, Address text, Zip text)\n"
    "CH_Insp(LicenseNo* text, Risk text, InspDate* text, InspType* text, Result text)\n"
    "CH_Rest(Name text, LicenseNo* text, Facility text, Address text, Zip text)\n";

constexpr const char *restaurant_fd = "!( CH_Rest(n, l, f, a, z), CH_Rest(n, l2, f2, a2, z2), z != z2 )";

std::string synthetic_relation(const std::string &rel, bool r4_compound_key) {
  static const std::map<std::string, int> arity{{"R1", 3}, {"R2", 3}, {"R3", 2}, {"R4", 3},
                                                {"R5", 3}, {"R6", 2}, {"R7", 2}};
  int n = arity.at(rel);
  std::string out = rel + "(";
  for (int i = 1; i <= n; ++i) {
    bool key = i == 1 || (i == 2 && rel == "R4" && r4_compound_key);
    out += rel + "_" + std::to_string(i) + (key ? "*" : "") + (i == 3 ? " integer" : " text");
    out += i == n ? ")" : ", ";
  }
  return out;
}

constexpr char alphabet[] = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

std::string random_text(std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> pick(0, 61);
  std::string s(10, ' ');
  for (char &c : s)
    c = alphabet[pick(rng)];
  return s;
}

using Row = std::vector<Value>;

std::vector<std::size_t> key_of(const RelationSchema &rs) {
  if (rs.has_key())
    return rs.key_positions;
  std::vector<std::size_t> all(rs.arity());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

std::string key_string(const Row &row, std::span<const std::size_t> positions) {
  std::string k;
  for (std::size_t p : positions) {
    k += format_value(row[p]);
    k += '\x1f';
  }
  return k;
}

class ValueSource {
public:
  ValueSource(std::mt19937_64 &rng, std::int64_t int_max) : rng_(rng), ints_(1, int_max) {}

  Value fresh(ValueKind kind) {
    if (kind == ValueKind::integer)
      return Value{ints_(rng_)};
    if (kind == ValueKind::decimal)
      return Value{static_cast<double>(ints_(rng_))};
    return Value{random_text(rng_)};
  }

private:
  std::mt19937_64 &rng_;
  std::uniform_int_distribution<std::int64_t> ints_;
};

std::uint64_t relation_seed(std::uint64_t seed, std::size_t rel) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rel + 1)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

} // namespace

std::vector<std::string> catalog_names() {
  std::vector<std::string> out;
  for (const auto &c : synthetic)
    out.emplace_back(c.name);
  for (const auto &c : restaurant)
    out.emplace_back(c.name);
  return out;
}

CatalogEntry query_catalog(std::string_view name) {
  for (const auto &c : synthetic) {
    if (name != c.name)
      continue;
    UnionQuery raw = parse_query(c.query);
    std::vector<std::string> rels;
    for (const auto &a : raw.disjuncts[0].atoms)
      rels.push_back(a.relation);
    std::sort(rels.begin(), rels.end());
    std::string schema_text;
    for (const auto &r : rels)
      schema_text += synthetic_relation(r, c.r4_compound_key) + "\n";
    CatalogEntry e;
    e.name = c.name;
    e.schema = parse_schema(schema_text);
    e.query = parse_query(c.query, e.schema);
    return e;
  }
  for (const auto &c : restaurant) {
    if (name != c.name)
      continue;
    CatalogEntry e;
    e.name = c.name;
    e.schema = parse_schema(restaurant_schema);
    e.query = parse_query(c.query, e.schema);
    e.constraints = parse_constraints(restaurant_fd, e.schema);
    return e;
  }
  throw ValidationError("unknown catalog query '" + std::string(name) + "'");
}

std::vector<unsigned> plan_groups(std::size_t participating, unsigned min_ksize, unsigned max_ksize,
                                  std::mt19937_64 &rng) {
  std::vector<unsigned> sizes;
  std::uniform_int_distribution<unsigned> draw(min_ksize, max_ksize);
  std::size_t left = participating;
  while (left >= 2) {
    unsigned k = draw(rng);
    if (k > left)
      k = static_cast<unsigned>(left);
    sizes.push_back(k);
    left -= k;
  }
  return sizes;
}

Generated generate(const CatalogEntry &entry, const GenConfig &cfg) {
  if (cfg.rsize < 1)
    throw ValidationError("rsize must be at least 1");
  if (!(cfg.indeg >= 0 && cfg.indeg <= 100))
    throw ValidationError("indeg must lie in [0, 100]");
  if (cfg.min_ksize < 2 || cfg.min_ksize > cfg.max_ksize)
    throw ValidationError("key-equal group sizes need 2 <= min <= max");
  if (!(cfg.selectivity >= 0))
    throw ValidationError("selectivity must be nonnegative");

  const Schema &schema = entry.schema;
  const std::size_t nrel = schema.size();
  const auto int_max = static_cast<std::int64_t>(std::max<std::size_t>(1, cfg.rsize / 10));

  // Injection plan per relation.
  const auto participating = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.rsize) * cfg.indeg / 100));
  std::vector<std::mt19937_64> rngs;
  std::vector<std::vector<unsigned>> plans(nrel);
  std::vector<std::size_t> core(nrel);
  for (std::size_t r = 0; r < nrel; ++r) {
    rngs.emplace_back(relation_seed(cfg.seed, r));
    plans[r] = plan_groups(participating, cfg.min_ksize, cfg.max_ksize, rngs[r]);
    std::size_t injected = 0;
    for (unsigned k : plans[r])
      injected += k - 1;
    if (injected >= cfg.rsize)
      throw ValidationError("indeg leaves no room for a consistent core");
    core[r] = cfg.rsize - injected;
    if (plans[r].size() > core[r])
      throw ValidationError("more key-equal groups than core tuples");
  }

  // Planted matches: one fresh valuation per match, one row per atom.
  std::mt19937_64 master(cfg.seed);
  ValueSource master_values(master, int_max);
  std::vector<std::vector<Row>> planted(nrel);
  const auto matches = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.rsize) * cfg.selectivity));
  const std::size_t nd = entry.query.disjuncts.size();
  std::unordered_set<std::string> used_text;
  for (std::size_t d = 0; d < nd; ++d) {
    const auto &cq = entry.query.disjuncts[d];
    std::map<std::string, ValueKind> kinds;
    for (const auto &a : cq.atoms) {
      const auto &rs = schema.at(schema.id_of(a.relation));
      for (std::size_t i = 0; i < a.terms.size(); ++i) {
        if (!a.terms[i].is_variable())
          continue;
        auto [it, fresh] = kinds.emplace(a.terms[i].variable(), rs.attributes[i].kind);
        if (!fresh && it->second != rs.attributes[i].kind)
          throw ValidationError("variable " + it->first + " joins columns of different kinds");
      }
    }
    std::size_t count = matches / nd + (d < matches % nd ? 1 : 0);
    for (std::size_t j = 0; j < count; ++j) {
      std::map<std::string, Value> val;
      for (const auto &[v, kind] : kinds) {
        Value x = master_values.fresh(kind);
        while (kind == ValueKind::text && !used_text.insert(std::get<std::string>(x)).second)
          x = master_values.fresh(kind);
        val.emplace(v, std::move(x));
      }
      for (const auto &a : cq.atoms) {
        Row row;
        for (const auto &t : a.terms)
          row.push_back(t.is_variable() ? val.at(t.variable()) : t.constant());
        planted[schema.id_of(a.relation)].push_back(std::move(row));
      }
    }
  }
  for (std::size_t r = 0; r < nrel; ++r)
    if (planted[r].size() > core[r])
      throw ValidationError("selectivity needs more planted rows than the consistent core of " +
                            schema.at(static_cast<RelationId>(r)).name + " holds");

  std::vector<std::vector<Row>> rows(nrel);
  std::vector<RelationStats> stats(nrel);
  std::vector<std::size_t> core_count(nrel);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t r = 0; r < nrel; ++r) {
    const auto &rs = schema.at(static_cast<RelationId>(r));
    auto &rng = rngs[r];
    ValueSource values(rng, int_max);
    auto key = key_of(rs);
    std::unordered_set<std::string> keys;
    std::vector<Row> out;
    out.reserve(cfg.rsize);
    for (auto &row : planted[r]) {
      keys.insert(key_string(row, key));
      out.push_back(std::move(row));
    }
    while (out.size() < core[r]) {
      Row row;
      for (const auto &attr : rs.attributes)
        row.push_back(values.fresh(attr.kind));
      if (keys.insert(key_string(row, key)).second)
        out.push_back(std::move(row));
    }
    std::shuffle(out.begin(), out.end(), rng);

    std::vector<std::size_t> idx(core[r]);
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t groups = plans[r].size();
    for (std::size_t g = 0; g < groups; ++g) {
      std::uniform_int_distribution<std::size_t> pick(g, idx.size() - 1);
      std::swap(idx[g], idx[pick(rng)]);
    }
    std::size_t injected = 0;
    for (std::size_t g = 0; g < groups; ++g) {
      const Row seed_row = out[idx[g]];
      for (unsigned k = 1; k < plans[r][g]; ++k) {
        Row row = seed_row;
        for (std::size_t i = 0; i < rs.arity(); ++i)
          if (!rs.is_key_position(i))
            row[i] = values.fresh(rs.attributes[i].kind);
        out.push_back(std::move(row));
        ++injected;
      }
    }
    stats[r].relation = rs.name;
    stats[r].core = core[r];
    stats[r].injected = injected;
    stats[r].planted = planted[r].size();
    core_count[r] = core[r];
    rows[r] = std::move(out);
  }

  InstanceBuilder b(schema);
  std::vector<char> core_flag(1, 0);
  for (std::size_t r = 0; r < nrel; ++r) {
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      FactId f = b.add(static_cast<RelationId>(r), rows[r][i]);
      if (f >= core_flag.size())
        core_flag.resize(f + 1, 0);
      if (i < core_count[r])
        core_flag[f] = 1;
    }
  }
  Generated g{std::move(b).build(), {}};
  for (std::size_t r = 0; r < nrel; ++r) {
    stats[r].rows = g.instance.facts_of(static_cast<RelationId>(r)).size();
    for (const auto &grp : g.instance.key_equal_groups(static_cast<RelationId>(r)))
      if (grp.size() > 1) {
        ++stats[r].groups;
        stats[r].in_violation += grp.size();
      }
  }
  core_flag.resize(g.instance.size() + 1, 0);
  for (const auto &cq : entry.query.disjuncts)
    g.report.core_witnesses += evaluate(cq, g.instance, core_flag).size();
  g.report.selectivity = static_cast<double>(g.report.core_witnesses) / static_cast<double>(cfg.rsize);
  g.report.relations = std::move(stats);
  return g;
}

void write_generated(const std::filesystem::path &dir, const CatalogEntry &entry, const Generated &g) {
  write_csv(g.instance, dir);
  auto put = [&](const std::string &file, const std::string &text) {
    std::ofstream out(dir / file);
    out << text;
    if (!out)
      throw Error("cannot write " + (dir / file).string());
  };
  put("schema.txt", entry.schema.to_text());
  put("query.txt", entry.query.to_text() + "\n");
  std::string dcs;
  for (const auto &dc : entry.constraints)
    dcs += dc.to_text() + "\n";
  put("constraints.txt", dcs);
}

std::string gen_report_json(const GenReport &report) {
  nlohmann::json j;
  j["core_witnesses"] = report.core_witnesses;
  j["selectivity"] = report.selectivity;
  j["relations"] = nlohmann::json::array();
  for (const auto &r : report.relations)
    j["relations"].push_back({{"relation", r.relation},
                              {"rows", r.rows},
                              {"core", r.core},
                              {"injected", r.injected},
                              {"groups", r.groups},
                              {"in_violation", r.in_violation},
                              {"planted", r.planted}});
  return j.dump(2);
}

} // namespace cqa
