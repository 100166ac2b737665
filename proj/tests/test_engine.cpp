#include "fixtures.hpp"
#include "support.hpp"

#include "cqa/engine.hpp"
#include "cqa/error.hpp"
#include "cqa/oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace cqa;
using namespace cqa::testing;

namespace {

std::set<std::string> names(const std::vector<std::vector<Value>> &rows) {
  std::set<std::string> out;
  for (const auto &r : rows) {
    std::string s;
    for (const auto &v : r)
      s += (s.empty() ? "" : "|") + format_value(v);
    out.insert(s);
  }
  return out;
}

std::vector<EngineOptions> all_configs(bool with_native) {
  std::vector<EngineOptions> out;
  for (Strategy st : {Strategy::maxsat, Strategy::iterative_sat})
    for (bool optimize : {true, false})
      for (KeyPathChoice kp : {KeyPathChoice::native, KeyPathChoice::denial}) {
        if (kp == KeyPathChoice::native && !with_native)
          continue;
        EngineOptions o;
        o.strategy = st;
        o.optimize = optimize;
        o.key_path = kp;
        out.push_back(o);
      }
  return out;
}

std::string config_name(const EngineOptions &o) {
  return std::string(to_string(o.strategy)) + (o.optimize ? "/opt" : "/noopt") +
         (o.key_path == KeyPathChoice::native ? "/native" : "/denial");
}

std::vector<std::vector<ValueId>> answer_ids(const AnswerReport &rep, const Instance &inst, Verdict v) {
  std::vector<std::vector<ValueId>> out;
  for (const auto &a : rep.answers) {
    if (a.verdict != v)
      continue;
    std::vector<ValueId> ids;
    for (const auto &val : a.values)
      ids.push_back(*inst.values().find(val));
    out.push_back(ids);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool answer_in(const UnionQuery &q, const Instance &inst, const FactSet &facts, const std::vector<Value> &values) {
  std::vector<char> allowed(inst.size() + 1, 0);
  for (FactId f : facts)
    allowed[f] = 1;
  for (const auto &row : answers(q, inst, allowed)) {
    std::vector<Value> vals;
    for (ValueId id : row)
      vals.push_back(inst.value(id));
    if (vals == values)
      return true;
  }
  return false;
}

} // namespace

TEST_SUITE("engine") {

TEST_CASE("canada-oak sample under every configuration") {
  Instance inst = flights();
  UnionQuery q = flights_query("canada_oak.query");
  for (const auto &o : all_configs(true)) {
    CAPTURE(config_name(o));
    AnswerReport rep = consistent_answers(q, inst, {}, o);
    CHECK(rep.complete);
    CHECK(rep.answers.size() == 2);
    CHECK(names(rep.consistent()) == std::set<std::string>{"JZA 8329"});
    CHECK(names(rep.inconsistent()) == std::set<std::string>{"SWA 1568"});
    CHECK(rep.iterations <= rep.answers.size());
  }
}

TEST_CASE("canada-oak sample optimized decides JZA 8329 from the consistent part") {
  Instance inst = flights();
  AnswerReport rep = consistent_answers(flights_query("canada_oak.query"), inst, {});
  CHECK(rep.key_path == KeyPath::native);
  CHECK(rep.consistent_facts == 5);
  std::vector<Value> jza{std::string("JZA 8329")};
  const auto &a = rep.answers[rep.find(jza)];
  CHECK(a.decided_by == DecidedBy::consistent_part);
  CHECK(a.witness == FactSet{2, 7});
  Explanation e = explain(rep, jza);
  CHECK(e.kind == "witness");
  CHECK(e.facts == FactSet{2, 7});
}

TEST_CASE("explanations of refuted answers are falsifying repairs") {
  Instance inst = flights();
  UnionQuery q = flights_query("canada_oak.query");
  std::vector<Value> swa{std::string("SWA 1568")};
  for (const auto &o : all_configs(true)) {
    CAPTURE(config_name(o));
    AnswerReport rep = consistent_answers(q, inst, {}, o);
    Explanation e = explain(rep, swa);
    CHECK(e.verdict == Verdict::inconsistent);
    CHECK(e.kind == "repair");
    CHECK(is_repair(inst, {}, e.facts));
    CHECK_FALSE(answer_in(q, inst, e.facts, swa));
  }
  AnswerReport rep = consistent_answers(q, inst, {});
  CHECK_THROWS_AS(explain(rep, std::vector<Value>{std::string("XX 1")}), ValidationError);
}

TEST_CASE("ticket sample under every configuration") {
  Instance inst = flights();
  UnionQuery q = flights_query("tickets.query");
  auto sigma = flights_constraints("tickets.constraints");
  for (const auto &o : all_configs(false)) {
    CAPTURE(config_name(o));
    AnswerReport rep = consistent_answers(q, inst, sigma, o);
    CHECK(rep.key_path == KeyPath::denial);
    CHECK(names(rep.consistent()) == std::set<std::string>{"KLF88V"});
    CHECK(names(rep.inconsistent()) == std::set<std::string>{"MJ9C8R", "NJ5RT3"});
    for (const auto &a : rep.answers) {
      if (a.verdict != Verdict::inconsistent)
        continue;
      REQUIRE(a.repair >= 0);
      const FactSet &r = rep.repairs[static_cast<std::size_t>(a.repair)];
      CHECK(is_repair(inst, sigma, r));
      CHECK_FALSE(answer_in(q, inst, r, a.values));
    }
    if (o.optimize) {
      const auto &k = rep.answers[rep.find(std::vector<Value>{std::string("KLF88V")})];
      CHECK(k.decided_by == DecidedBy::consistent_part);
      CHECK(k.witness == FactSet{5});
    }
  }
  EngineOptions native;
  native.key_path = KeyPathChoice::native;
  CHECK_THROWS_AS(consistent_answers(q, inst, sigma, native), ValidationError);
}

TEST_CASE("consistent instance needs no solver") {
  Instance inst = make_instance("R(A* text, B text)\nS(B* text, C text)", {{"R", text_tuple({"a", "b"})},
                                                                           {"R", text_tuple({"c", "d"})},
                                                                           {"S", text_tuple({"b", "e"})}});
  UnionQuery q = parse_query("q(x) :- R(x, y) ; q(y) :- S(y, z)", inst.schema());
  AnswerReport rep = consistent_answers(q, inst, {});
  CHECK(rep.answers.size() == 3);
  CHECK(rep.count(Verdict::consistent) == 3);
  CHECK(rep.solver_calls == 0);
  CHECK(rep.iterations == 0);
  CHECK(rep.variables == 0);
}

TEST_CASE("no potential answers") {
  Instance inst = flights();
  UnionQuery q = parse_query("q(x) :- Flights(x, y, z, p, 'NOWHERE', q, r)", inst.schema());
  for (const auto &o : all_configs(true)) {
    AnswerReport rep = consistent_answers(q, inst, {}, o);
    CHECK(rep.answers.empty());
    CHECK(rep.iterations == 0);
    CHECK(rep.complete);
  }
}

TEST_CASE("certain_boolean") {
  Instance inst = flights();
  CHECK(certain_boolean(flights_query("canada_oak_boolean.query"), inst, {}));
  UnionQuery none = parse_query("q() :- Airlines(x, 'Peru')", inst.schema());
  CHECK_FALSE(certain_boolean(none, inst, {}));
  UnionQuery us = parse_query("q() :- Airlines('Southwest', 'Canada')", inst.schema());
  CHECK_FALSE(certain_boolean(us, inst, {}));
  UnionQuery sw = parse_query("q() :- Airlines('Southwest', c)", inst.schema());
  CHECK(certain_boolean(sw, inst, {}));
  CHECK_THROWS_AS(certain_boolean(flights_query("canada_oak.query"), inst, {}), ValidationError);

  auto sigma = flights_constraints("tickets.constraints");
  UnionQuery silk = parse_query("q() :- Flights(c, d, 'Silkair', f, t, x, y)", inst.schema());
  CHECK_FALSE(certain_boolean(silk, inst, sigma));
  UnionQuery first = parse_query("q() :- Tickets(p, c, 'First', f)", inst.schema());
  CHECK(certain_boolean(first, inst, sigma));
}

TEST_CASE("sink pattern") {
  const char *schema = "R(A* text, B text)\nS(A* text, B text)";
  UnionQuery q = parse_query("q() :- R(x, z), S(y, z)", parse_schema(schema));
  SUBCASE("crafted six facts") {
    // Every choice of R(a,_) meets an S value on both S groups.
    Instance inst = make_instance(schema, {{"R", text_tuple({"a", "1"})},
                                           {"R", text_tuple({"a", "2"})},
                                           {"S", text_tuple({"b", "1"})},
                                           {"S", text_tuple({"b", "2"})},
                                           {"S", text_tuple({"c", "1"})},
                                           {"S", text_tuple({"c", "2"})}});
    bool truth = certain_bruteforce(q, inst, {});
    CHECK_FALSE(truth);
    for (const auto &o : all_configs(true))
      CHECK(certain_boolean(q, inst, {}, o) == truth);
  }
  SUBCASE("random instances") {
    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 200; ++iter) {
      InstanceBuilder b(parse_schema(schema));
      std::uniform_int_distribution<int> k(0, 2), v(0, 3), rel(0, 1);
      for (int f = 0; f < 7; ++f)
        b.add(rel(rng) ? "R" : "S",
              text_tuple({std::to_string(k(rng)).c_str(), std::to_string(v(rng)).c_str()}));
      Instance inst = std::move(b).build();
      bool truth = certain_bruteforce(q, inst, {});
      for (const auto &o : all_configs(true))
        CHECK(certain_boolean(q, inst, {}, o) == truth);
    }
  }
}

TEST_CASE("differential against the repair oracle") {
  std::mt19937_64 rng(2024);
  for (int iter = 0; iter < 250; ++iter) {
    RandomProblemOptions opt;
    opt.constraints = iter % 2 == 1;
    opt.boolean_only = iter % 5 == 0;
    Problem pb = random_problem(rng, opt);
    CAPTURE(pb.describe());
    auto expected = consistent_answers_bruteforce(pb.query, pb.instance, pb.constraints);
    std::sort(expected.begin(), expected.end());
    for (const auto &o : all_configs(pb.constraints.empty())) {
      CAPTURE(config_name(o));
      AnswerReport rep = consistent_answers(pb.query, pb.instance, pb.constraints, o);
      REQUIRE(rep.complete);
      CHECK(answer_ids(rep, pb.instance, Verdict::consistent) == expected);
      CHECK(rep.count(Verdict::unknown) == 0);
      CHECK(rep.iterations <= rep.answers.size());
      for (const auto &a : rep.answers) {
        if (a.verdict != Verdict::inconsistent)
          continue;
        REQUIRE(a.repair >= 0);
        const FactSet &r = rep.repairs[static_cast<std::size_t>(a.repair)];
        CHECK(is_repair(pb.instance, pb.constraints, r));
        CHECK_FALSE(answer_in(pb.query, pb.instance, r, a.values));
        CHECK(a.iteration >= 1);
        CHECK(a.iteration <= rep.iterations);
      }
      if (pb.query.is_boolean())
        CHECK(certain_boolean(pb.query, pb.instance, pb.constraints, o) == !expected.empty());
    }
  }
}

TEST_CASE("keeping refuted witness clauses gives the same verdicts") {
  // Elimination that only adds the hard unit (-p) and leaves every clause in place.
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 100; ++iter) {
    RandomProblemOptions opt;
    opt.constraints = iter % 2 == 1;
    Problem pb = random_problem(rng, opt);
    CAPTURE(pb.describe());
    KeyPath path = pb.constraints.empty() ? KeyPath::native : KeyPath::denial;
    auto sigma = effective_constraints(pb.schema, pb.constraints, path);
    Conflicts c = compute_conflicts(pb.instance, sigma, path);
    WitnessIndex w = minimal_witnesses(pb.query, pb.instance);
    CnfFormula phi = build_formula(pb.instance, c, w, full_scope(pb.instance, w), true);
    WcnfFormula psi = to_wcnf(phi);
    std::set<std::size_t> refuted;
    for (;;) {
      WcnfFormula cur;
      cur.num_vars = psi.num_vars;
      cur.hard = psi.hard;
      for (std::size_t l = 0; l < w.size(); ++l) {
        if (refuted.count(l))
          cur.hard.push_back({-phi.vars.p[l]});
        else
          cur.soft.push_back({{phi.vars.p[l]}, 1});
      }
      MaxSatResult r = maxsat_solve_serial(cur, {});
      REQUIRE(r.status == MaxSatStatus::optimum);
      std::size_t before = refuted.size();
      for (std::size_t l = 0; l < w.size(); ++l)
        if (!refuted.count(l) && r.model[static_cast<std::size_t>(phi.vars.p[l])])
          refuted.insert(l);
      if (refuted.size() == before)
        break;
    }
    AnswerReport rep = consistent_answers(pb.query, pb.instance, pb.constraints);
    std::set<std::size_t> engine_refuted;
    for (std::size_t l = 0; l < rep.answers.size(); ++l)
      if (rep.answers[l].verdict == Verdict::inconsistent)
        engine_refuted.insert(l);
    CHECK(engine_refuted == refuted);
  }
}

TEST_CASE("external solver through the command line") {
  Instance inst = flights();
  EngineOptions o;
  o.solver = std::string(CQA_CLI) + " solve";
  o.optimize = false;
  AnswerReport rep = consistent_answers(flights_query("canada_oak.query"), inst, {}, o);
  CHECK(names(rep.consistent()) == std::set<std::string>{"JZA 8329"});
  o.strategy = Strategy::iterative_sat;
  CHECK_THROWS_AS(consistent_answers(flights_query("canada_oak.query"), inst, {}, o), ValidationError);
}

TEST_CASE("report rendering") {
  Instance inst = flights();
  AnswerReport rep = consistent_answers(flights_query("canada_oak.query"), inst, {});
  std::string js = report_json(rep, inst, true);
  CHECK(js.find("\"JZA 8329\"") != std::string::npos);
  CHECK(js.find("consistent-part") != std::string::npos);
  std::string table = report_table(rep);
  CHECK(table.find("SWA 1568") != std::string::npos);
  CHECK(parse_strategy("iter-sat") == Strategy::iterative_sat);
  CHECK(parse_strategy("maxsat") == Strategy::maxsat);
  CHECK_FALSE(parse_strategy("bogus").has_value());
}

} // TEST_SUITE
