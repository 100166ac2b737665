#include "cqa/oracle.hpp"

#include "cqa/error.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

namespace cqa {

namespace {

bool keys_hold(const Instance &inst, std::span<const char> present) {
  const auto &schema = inst.schema();
  for (RelationId r = 0; r < schema.size(); ++r) {
    const auto &rs = schema.at(r);
    if (!rs.has_key())
      continue;
    std::set<std::vector<ValueId>> seen;
    for (FactId f : inst.facts_of(r)) {
      if (!present[f])
        continue;
      std::vector<ValueId> key;
      for (auto p : rs.key_positions)
        key.push_back(inst.fact(f).values[p]);
      if (!seen.insert(std::move(key)).second)
        return false;
    }
  }
  return true;
}

std::vector<char> flags_of(const Instance &inst, const FactSet &facts) {
  std::vector<char> present(inst.size() + 1, 0);
  for (FactId f : facts)
    present.at(f) = 1;
  return present;
}

using Mask = std::uint64_t;

/// Minimal violations by testing every subset up to the widest constraint.
std::vector<Mask> brute_violations(const Instance &inst, std::span<const DenialConstraint> sigma) {
  const std::size_t n = inst.size();
  std::size_t width = 0;
  for (const auto &rs : inst.schema().relations())
    if (rs.has_key())
      width = 2;
  for (const auto &dc : sigma)
    width = std::max(width, dc.atoms.size());
  std::vector<Mask> out;
  std::vector<char> present(n + 1, 0);
  std::vector<FactId> pick;
  // Subsets in order of size so minimality is a check against earlier finds.
  for (std::size_t size = 1; size <= width; ++size) {
    std::vector<Mask> found;
    auto rec = [&](auto &self, FactId from) -> void {
      if (pick.size() == size) {
        Mask m = 0;
        for (FactId f : pick)
          m |= Mask{1} << (f - 1);
        for (Mask e : out)
          if ((e & m) == e)
            return;
        for (FactId f : pick)
          present[f] = 1;
        bool bad = !is_consistent(inst, sigma, present);
        for (FactId f : pick)
          present[f] = 0;
        if (bad)
          found.push_back(m);
        return;
      }
      for (FactId f = from; f <= n; ++f) {
        pick.push_back(f);
        self(self, f + 1);
        pick.pop_back();
      }
    };
    rec(rec, 1);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

} // namespace

bool is_consistent(const Instance &inst, std::span<const DenialConstraint> sigma, std::span<const char> present) {
  if (!keys_hold(inst, present))
    return false;
  for (const auto &dc : sigma)
    if (!evaluate(dc.as_query(), inst, present).empty())
      return false;
  return true;
}

bool is_consistent(const Instance &inst, std::span<const DenialConstraint> sigma, const FactSet &facts) {
  auto present = flags_of(inst, facts);
  return is_consistent(inst, sigma, present);
}

bool is_repair(const Instance &inst, std::span<const DenialConstraint> sigma, const FactSet &facts) {
  auto present = flags_of(inst, facts);
  if (!is_consistent(inst, sigma, present))
    return false;
  for (FactId f = 1; f <= inst.size(); ++f) {
    if (present[f])
      continue;
    present[f] = 1;
    bool ok = is_consistent(inst, sigma, present);
    present[f] = 0;
    if (ok)
      return false;
  }
  return true;
}

RepairSet enumerate_repairs(const Instance &inst, std::span<const DenialConstraint> sigma, std::size_t cap) {
  RepairSet out;
  if (sigma.empty()) {
    auto groups = inst.all_key_equal_groups();
    double bound = 1;
    for (const auto &g : groups)
      bound *= static_cast<double>(g.size());
    if (bound > static_cast<double>(cap))
      throw Error("repair enumeration refused: up to " + std::to_string(bound) + " repairs exceed the cap of " +
                  std::to_string(cap));
    std::vector<std::size_t> choice(groups.size(), 0);
    while (true) {
      FactSet r;
      for (std::size_t g = 0; g < groups.size(); ++g)
        r.push_back(groups[g][choice[g]]);
      std::sort(r.begin(), r.end());
      out.push_back(std::move(r));
      std::size_t g = 0;
      while (g < groups.size() && ++choice[g] == groups[g].size())
        choice[g++] = 0;
      if (g == groups.size())
        break;
    }
    return out;
  }

  const std::size_t n = inst.size();
  if (n > 63)
    throw Error("repair enumeration refused: " + std::to_string(n) + " facts under denial constraints");
  auto edges = brute_violations(inst, sigma);
  Mask involved = 0;
  for (Mask e : edges)
    involved |= e;
  std::vector<FactId> free_facts;
  for (FactId f = 1; f <= n; ++f)
    if (involved & (Mask{1} << (f - 1)))
      free_facts.push_back(f);
  if (free_facts.size() >= 63 || (Mask{1} << free_facts.size()) > cap)
    throw Error("repair enumeration refused: 2^" + std::to_string(free_facts.size()) +
                " candidate subsets exceed the cap of " + std::to_string(cap));
  Mask always = ((Mask{1} << n) - 1) & ~involved;
  auto clean = [&](Mask s) {
    for (Mask e : edges)
      if ((e & s) == e)
        return false;
    return true;
  };
  auto rec = [&](auto &self, std::size_t i, Mask cur) -> void {
    if (i == free_facts.size()) {
      for (FactId f : free_facts) {
        Mask bit = Mask{1} << (f - 1);
        if (!(cur & bit) && clean(cur | bit))
          return; // not maximal
      }
      FactSet r;
      Mask all = cur | always;
      for (FactId f = 1; f <= n; ++f)
        if (all & (Mask{1} << (f - 1)))
          r.push_back(f);
      out.push_back(std::move(r));
      return;
    }
    Mask bit = Mask{1} << (free_facts[i] - 1);
    if (clean(cur | bit))
      self(self, i + 1, cur | bit);
    self(self, i + 1, cur);
  };
  rec(rec, 0, 0);
  return out;
}

std::vector<std::vector<ValueId>> consistent_answers_bruteforce(const UnionQuery &q, const Instance &inst,
                                                                std::span<const DenialConstraint> sigma,
                                                                std::size_t cap) {
  auto candidates = answers(q, inst);
  std::vector<char> alive(candidates.size(), 1);
  for (const auto &r : enumerate_repairs(inst, sigma, cap)) {
    auto present = flags_of(inst, r);
    auto got = answers(q, inst, present);
    std::set<std::vector<ValueId>> in(got.begin(), got.end());
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (alive[i] && !in.count(candidates[i]))
        alive[i] = 0;
  }
  std::vector<std::vector<ValueId>> out;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (alive[i])
      out.push_back(candidates[i]);
  return out;
}

bool certain_bruteforce(const UnionQuery &q, const Instance &inst, std::span<const DenialConstraint> sigma,
                        std::size_t cap) {
  if (!q.is_boolean())
    throw ValidationError("certain_bruteforce needs a boolean query");
  return !consistent_answers_bruteforce(q, inst, sigma, cap).empty();
}

// ---------------------------------------------------------------------------

std::string Problem::describe() const {
  std::string out = "# schema\n" + schema.to_text();
  out += "# constraints\n";
  for (const auto &dc : constraints)
    out += dc.to_text() + "\n";
  out += "# query\n" + query.to_text() + "\n";
  for (RelationId r = 0; r < schema.size(); ++r) {
    out += "# " + schema.at(r).name + ".csv\n";
    out += relation_to_csv(instance, r);
  }
  return out;
}

namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng &rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool coin(Rng &rng, double p) { return std::bernoulli_distribution(p)(rng); }

Value small_value(Rng &rng) { return Value{static_cast<std::int64_t>(pick(rng, 1, 3))}; }

RelationalAtom random_atom(Rng &rng, const Schema &schema, const std::string &prefix, std::size_t pool,
                           double constant_rate) {
  const auto &rs = schema.at(static_cast<RelationId>(pick(rng, 0, schema.size() - 1)));
  RelationalAtom a;
  a.relation = rs.name;
  for (std::size_t i = 0; i < rs.arity(); ++i) {
    if (coin(rng, constant_rate))
      a.terms.push_back(Term::constant(small_value(rng)));
    else
      a.terms.push_back(Term::var(prefix + std::to_string(pick(rng, 0, pool - 1))));
  }
  return a;
}

std::vector<std::string> variables_of(const std::vector<RelationalAtom> &atoms) {
  std::vector<std::string> vars;
  for (const auto &a : atoms)
    for (const auto &t : a.terms)
      if (t.is_variable() && std::find(vars.begin(), vars.end(), t.variable()) == vars.end())
        vars.push_back(t.variable());
  return vars;
}

BuiltinAtom random_builtin(Rng &rng, const std::vector<std::string> &vars) {
  static constexpr CompareOp ops[] = {CompareOp::ne, CompareOp::lt, CompareOp::le,
                                      CompareOp::eq, CompareOp::gt, CompareOp::ge};
  BuiltinAtom b;
  b.op = ops[pick(rng, 0, 5)];
  b.lhs = Term::var(vars[pick(rng, 0, vars.size() - 1)]);
  if (vars.size() > 1 && coin(rng, 0.7)) {
    std::string other;
    do
      other = vars[pick(rng, 0, vars.size() - 1)];
    while (other == b.lhs.variable());
    b.rhs = Term::var(other);
  } else {
    b.rhs = Term::constant(small_value(rng));
  }
  return b;
}

} // namespace

Problem random_problem(std::mt19937_64 &rng, const RandomProblemOptions &opt) {
  Problem p;
  std::vector<RelationSchema> rels;
  const std::size_t nrel = pick(rng, 1, opt.max_relations);
  for (std::size_t r = 0; r < nrel; ++r) {
    RelationSchema rs;
    rs.name = "R" + std::to_string(r + 1);
    std::size_t arity = pick(rng, 2, 3);
    for (std::size_t i = 0; i < arity; ++i)
      rs.attributes.push_back({"A" + std::to_string(i + 1), ValueKind::integer});
    if (opt.keys && coin(rng, 0.85)) {
      rs.key_positions.push_back(0);
      if (arity == 3 && coin(rng, 0.2))
        rs.key_positions.push_back(1);
    }
    rels.push_back(std::move(rs));
  }
  p.schema = Schema(std::move(rels));

  InstanceBuilder b(p.schema);
  const std::size_t nfacts = pick(rng, 1, opt.max_facts);
  for (std::size_t i = 0; i < nfacts; ++i) {
    auto r = static_cast<RelationId>(pick(rng, 0, p.schema.size() - 1));
    std::vector<Value> vals;
    for (std::size_t k = 0; k < p.schema.at(r).arity(); ++k)
      vals.push_back(small_value(rng));
    b.add(r, vals);
  }
  p.instance = std::move(b).build();

  if (opt.constraints) {
    std::size_t lo = opt.keys ? 0 : 1;
    std::size_t ndc = pick(rng, lo, std::max(lo, opt.max_constraints));
    for (std::size_t d = 0; d < ndc; ++d) {
      DenialConstraint dc;
      std::size_t natoms = pick(rng, 1, opt.max_constraint_atoms);
      for (std::size_t k = 0; k < natoms; ++k)
        dc.atoms.push_back(random_atom(rng, p.schema, "x", 4, 0.1));
      auto vars = variables_of(dc.atoms);
      if (!vars.empty() && (natoms == 1 || coin(rng, 0.6)))
        dc.builtins.push_back(random_builtin(rng, vars));
      validate(dc, p.schema);
      p.constraints.push_back(std::move(dc));
    }
  }

  const std::size_t head = opt.boolean_only ? 0 : pick(rng, 0, opt.max_head);
  const std::size_t ndisj = coin(rng, 0.3) ? pick(rng, 1, opt.max_disjuncts) : 1;
  while (p.query.disjuncts.size() < ndisj) {
    ConjunctiveQuery cq;
    std::size_t natoms = pick(rng, 1, opt.max_query_atoms);
    for (std::size_t k = 0; k < natoms; ++k)
      cq.atoms.push_back(random_atom(rng, p.schema, "v", 4, 0.12));
    auto vars = variables_of(cq.atoms);
    if (vars.size() < head)
      continue;
    std::shuffle(vars.begin(), vars.end(), rng);
    cq.head.assign(vars.begin(), vars.begin() + static_cast<std::ptrdiff_t>(head));
    if (!vars.empty() && coin(rng, 0.15))
      cq.builtins.push_back(random_builtin(rng, vars));
    p.query.disjuncts.push_back(std::move(cq));
  }
  validate(p.query, p.schema);
  return p;
}

} // namespace cqa
