#include "fixtures.hpp"
#include "support.hpp"

#include "cqa/encoder.hpp"
#include "cqa/engine.hpp"
#include "cqa/oracle.hpp"
#include "cqa/witnesses.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace cqa;
using namespace cqa::testing;

namespace {

std::multiset<Clause> as_multiset(std::vector<Clause> cs) {
  std::multiset<Clause> out;
  for (auto &c : cs) {
    normalize_clause(c);
    out.insert(c);
  }
  return out;
}

std::multiset<Clause> all_clauses(const CnfFormula &phi) {
  return as_multiset({phi.clauses().begin(), phi.clauses().end()});
}

std::vector<FactSet> sorted(std::vector<FactSet> v) {
  std::sort(v.begin(), v.end());
  return v;
}

UnionQuery boolean_for(const UnionQuery &q, std::span<const Value> answer) {
  UnionQuery out;
  for (const auto &cq : q.disjuncts)
    out.disjuncts.push_back(substitute(cq, answer));
  return out;
}

// Answers whose p variable is 1 in some model of phi.
std::set<std::size_t> refutable_answers(const CnfFormula &phi) {
  std::set<std::size_t> out;
  for (std::size_t l = 0; l < phi.vars.p.size(); ++l) {
    int p = phi.vars.p[l];
    if (p == 0)
      continue;
    std::vector<Clause> cs(phi.clauses().begin(), phi.clauses().end());
    if (sat_solve(cs, phi.num_vars(), {}, std::vector<int>{p}).status == sat::Status::sat)
      out.insert(l);
  }
  return out;
}

} // namespace

TEST_SUITE("encoder") {

TEST_CASE("canada-oak sample: answer-variable keys encoding") {
  Instance inst = flights();
  UnionQuery q = flights_query("canada_oak.query");
  CnfFormula phi = encode_keys_nonboolean(inst, q);
  CHECK(phi.vars.p.size() == 2);
  CHECK(phi.vars.p[0] == 10);
  CHECK(phi.vars.p[1] == 11);
  CHECK(phi.num_vars() == 11);
  std::multiset<Clause> expected = as_multiset({{1, 3}, {2}, {4}, {5}, {6}, {7}, {8, 9}, {-2, -7, -10}, {-3, -9, -11}});
  CHECK(all_clauses(phi) == expected);
  CHECK(phi.count(ClauseRole::alpha) == 7);
  CHECK(phi.count(ClauseRole::beta) == 2);

  WcnfFormula psi = to_wcnf(phi);
  CHECK(psi.num_vars == 11);
  CHECK(psi.hard.size() == 9);
  REQUIRE(psi.soft.size() == 2);
  CHECK(psi.soft[0].lits == Clause{10});
  CHECK(psi.soft[1].lits == Clause{11});
  CHECK(psi.top() == 3);
  std::string text = export_dimacs(psi);
  CHECK(text.rfind("p wcnf 11 11 3\n", 0) == 0);
}

TEST_CASE("canada-oak sample: boolean query with the answer fixed") {
  Instance inst = flights();
  UnionQuery q = flights_query("canada_oak.query");
  std::vector<Value> swa{std::string("SWA 1568")};
  CnfFormula phi = encode_keys_boolean(inst, boolean_for(q, swa));
  CHECK(phi.vars.num_p() == 0);
  CHECK(phi.num_vars() == 9);
  std::multiset<Clause> cl = all_clauses(phi);
  CHECK(cl.count(Clause{-3, -9}) == 1);
  CHECK(cl.size() == 8);
  // Both repairs dropping f3 or f9 falsify it, so the formula is satisfiable.
  std::vector<Clause> cs(phi.clauses().begin(), phi.clauses().end());
  CHECK(sat_solve(cs, phi.num_vars()).status == sat::Status::sat);
  CHECK_FALSE(certain_bruteforce(boolean_for(q, swa), inst, {}));
}

TEST_CASE("boolean keys encoding: duplicate key with a query true in both repairs") {
  Instance inst = make_instance("R(A* text, B text)", {{"R", text_tuple({"a", "b"})}, {"R", text_tuple({"a", "c"})}});
  UnionQuery q = parse_query("q() :- R(x, y)", inst.schema());
  CnfFormula phi = encode_keys_boolean(inst, q);
  CHECK(all_clauses(phi) == as_multiset({{1, 2}, {-1}, {-2}}));
  std::vector<Clause> cs(phi.clauses().begin(), phi.clauses().end());
  CHECK(sat_solve(cs, phi.num_vars()).status == sat::Status::unsat);
  CHECK(certain_bruteforce(q, inst, {}));
}

TEST_CASE("boolean keys encoding: consistent instance with a false query") {
  Instance inst = make_instance("R(A* text, B text)", {{"R", text_tuple({"a", "b"})}, {"R", text_tuple({"c", "d"})}});
  UnionQuery q = parse_query("q() :- R(x, 'zz')", inst.schema());
  CnfFormula phi = encode_keys_boolean(inst, q);
  CHECK(all_clauses(phi) == as_multiset({{1}, {2}}));
  CHECK(phi.count(ClauseRole::beta) == 0);
  std::vector<Clause> cs(phi.clauses().begin(), phi.clauses().end());
  CHECK(sat_solve(cs, phi.num_vars()).status == sat::Status::sat);
}

TEST_CASE("answer-variable keys encoding: no potential answers leaves only alpha clauses") {
  Instance inst = flights();
  UnionQuery q = parse_query("q(x) :- Flights(x, y, z, p, 'NOWHERE', q, r)", inst.schema());
  CnfFormula phi = encode_keys_nonboolean(inst, q);
  CHECK(phi.count(ClauseRole::beta) == 0);
  CHECK(phi.size() == phi.count(ClauseRole::alpha));
  CHECK(to_wcnf(phi).soft.empty());
}

TEST_CASE("answer-variable keys encoding: both facts of a group witness the same answer") {
  Instance inst = make_instance("R(A* text, B text)", {{"R", text_tuple({"a", "b"})}, {"R", text_tuple({"a", "c"})}});
  UnionQuery q = parse_query("q(x) :- R(x, y)", inst.schema());
  CnfFormula phi = encode_keys_nonboolean(inst, q);
  CHECK(all_clauses(phi) == as_multiset({{1, 2}, {-1, -3}, {-2, -3}}));
  CHECK(refutable_answers(phi).empty());
  CHECK(consistent_answers_bruteforce(q, inst, {}).size() == 1);
}

TEST_CASE("ticket sample: violations, near-violations and witnesses") {
  Instance inst = flights();
  auto sigma = effective_constraints(inst.schema(), flights_constraints("tickets.constraints"), KeyPath::denial);
  ViolationIndex vi = violation_index(sigma, inst);
  CHECK(sorted(vi.violations) == std::vector<FactSet>{{1, 3}, {4, 6, 9}, {8}});
  REQUIRE(vi.near.size() == 10);
  CHECK(vi.near[1] == std::vector<FactSet>{{3}});
  CHECK(vi.near[3] == std::vector<FactSet>{{1}});
  CHECK(vi.near[4] == std::vector<FactSet>{{6, 9}});
  CHECK(vi.near[6] == std::vector<FactSet>{{4, 9}});
  CHECK(vi.near[9] == std::vector<FactSet>{{4, 6}});
  CHECK(vi.near[8] == std::vector<FactSet>{{true_fact}});
  for (FactId f : {2u, 5u, 7u})
    CHECK(vi.near[f].empty());
  CHECK(consistent_part(inst, sigma) == std::vector<FactId>{2, 5, 7});

  UnionQuery q = flights_query("tickets.query");
  WitnessIndex w = minimal_witnesses(q, inst);
  REQUIRE(w.size() == 3);
  std::map<std::string, std::vector<FactSet>> by_answer;
  for (std::size_t l = 0; l < w.size(); ++l)
    by_answer[format_value(inst.value(w.answers[l][0]))] = w.witnesses[l];
  CHECK(by_answer["KLF88V"] == std::vector<FactSet>{{5}});
  CHECK(by_answer["NJ5RT3"] == std::vector<FactSet>{{6}});
  CHECK(by_answer["MJ9C8R"] == std::vector<FactSet>{{4, 8}});
}

TEST_CASE("ticket sample: denial encoding clause sets") {
  Instance inst = flights();
  auto sigma = effective_constraints(inst.schema(), flights_constraints("tickets.constraints"), KeyPath::denial);
  UnionQuery q = flights_query("tickets.query");
  CnfFormula phi = encode_denial(inst, sigma, q);
  const VariableMap &vm = phi.vars;
  REQUIRE(vm.p.size() == 3);
  CHECK(phi.num_vars() == 16);
  CHECK(vm.x_true == 16);
  CHECK(vm.name(16) == "x_true");

  // Fix the answer numbering to KLF88V, NJ5RT3, MJ9C8R as p1..p3 through the map.
  WitnessIndex w = minimal_witnesses(q, inst);
  std::map<std::string, int> p;
  for (std::size_t l = 0; l < w.size(); ++l)
    p[format_value(inst.value(w.answers[l][0]))] = vm.p[l];
  std::set<int> pvars{p["KLF88V"], p["NJ5RT3"], p["MJ9C8R"]};
  CHECK(pvars == std::set<int>{10, 11, 12});
  REQUIRE(vm.y.size() == 3);
  int y4 = vm.y_base, y6 = vm.y_base + 1, y9 = vm.y_base + 2;
  CHECK(y4 == 13);
  CHECK(vm.y[0].fact == 4);
  CHECK(vm.y[1].fact == 6);
  CHECK(vm.y[2].fact == 9);

  auto role_set = [&](ClauseRole r) {
    auto m = as_multiset(phi.clauses_of(r));
    return std::set<Clause>(m.begin(), m.end());
  };
  auto to_set = [](std::vector<Clause> cs) {
    auto m = as_multiset(std::move(cs));
    return std::set<Clause>(m.begin(), m.end());
  };
  CHECK(role_set(ClauseRole::alpha) == to_set({{-1, -3}, {-8}, {-4, -6, -9}}));
  CHECK(role_set(ClauseRole::beta) ==
        to_set({{-5, -p["KLF88V"]}, {-6, -p["NJ5RT3"]}, {-4, -8, -p["MJ9C8R"]}}));
  CHECK(role_set(ClauseRole::gamma) ==
        to_set({{1, 3}, {2}, {3, 1}, {4, y4}, {5}, {6, y6}, {7}, {8, 16}, {9, y9}}));
  CHECK(role_set(ClauseRole::theta) == to_set({{-y4, 6},
                                               {-y4, 9},
                                               {-6, -9, y4},
                                               {-y6, 4},
                                               {-y6, 9},
                                               {-4, -9, y6},
                                               {-y9, 4},
                                               {-y9, 6},
                                               {-4, -6, y9}}));
  CHECK(role_set(ClauseRole::truth) == to_set({{16}}));

  WcnfFormula psi = to_wcnf(phi);
  CHECK(psi.soft.size() == 3);
  CHECK(psi.hard.size() == phi.size());
}

TEST_CASE("denial encoding: no constraints") {
  Instance inst = make_instance("R(A text, B text)", {{"R", text_tuple({"a", "b"})}, {"R", text_tuple({"a", "c"})}});
  UnionQuery q = parse_query("q(x) :- R(x, y)", inst.schema());
  CnfFormula phi = encode_denial(inst, {}, q);
  CHECK(phi.count(ClauseRole::alpha) == 0);
  CHECK(as_multiset(phi.clauses_of(ClauseRole::gamma)) == as_multiset({{1}, {2}}));
  CHECK(phi.vars.y.empty());
  CHECK(phi.vars.x_true == 0);
}

TEST_CASE("denial encoding: a singleton violation forces its fact out") {
  Instance inst = flights();
  auto sigma = effective_constraints(inst.schema(), flights_constraints("tickets.constraints"), KeyPath::denial);
  CnfFormula phi = encode_denial(inst, sigma, flights_query("tickets.query"));
  CHECK(as_multiset(phi.clauses_of(ClauseRole::alpha)).count(Clause{-8}) == 1);
  std::vector<Clause> cs(phi.clauses().begin(), phi.clauses().end());
  CHECK(sat_solve(cs, phi.num_vars(), {}, std::vector<int>{8}).status == sat::Status::unsat);
  for (const auto &r : enumerate_repairs(inst, flights_constraints("tickets.constraints")))
    CHECK(std::find(r.begin(), r.end(), 8u) == r.end());
}

TEST_CASE("consistent-part optimization") {
  Instance inst = flights();
  SUBCASE("canada-oak sample") {
    UnionQuery q = flights_query("canada_oak.query");
    Conflicts c = compute_conflicts(inst, {}, KeyPath::native);
    CHECK(c.num_consistent() == 5);
    WitnessIndex w = minimal_witnesses(q, inst);
    Scope s = apply_consistent_part_optimization(inst, c, w);
    std::size_t jza = 0;
    for (std::size_t l = 0; l < w.size(); ++l)
      if (format_value(inst.value(w.answers[l][0])) == "JZA 8329")
        jza = l;
    CHECK(s.consistent_witness[jza] >= 0);
    CHECK_FALSE(s.answer_in[jza]);
    CHECK(s.answer_in[1 - jza]);
    CnfFormula phi = build_formula(inst, c, w, s, true);
    CHECK(phi.vars.num_p() == 1);
    CHECK(phi.num_vars() < 11);
  }
  SUBCASE("ticket sample") {
    auto sigma = effective_constraints(inst.schema(), flights_constraints("tickets.constraints"), KeyPath::denial);
    UnionQuery q = flights_query("tickets.query");
    Conflicts c = compute_conflicts(inst, sigma, KeyPath::denial);
    WitnessIndex w = minimal_witnesses(q, inst);
    Scope s = apply_consistent_part_optimization(inst, c, w);
    for (std::size_t l = 0; l < w.size(); ++l) {
      bool klf = format_value(inst.value(w.answers[l][0])) == "KLF88V";
      CHECK((s.consistent_witness[l] >= 0) == klf);
    }
  }
  SUBCASE("consistent instance decides everything") {
    Instance ok = make_instance("R(A* text, B text)", {{"R", text_tuple({"a", "b"})}, {"R", text_tuple({"c", "d"})}});
    UnionQuery q = parse_query("q(x) :- R(x, y)", ok.schema());
    Conflicts c = compute_conflicts(ok, {}, KeyPath::native);
    WitnessIndex w = minimal_witnesses(q, ok);
    Scope s = apply_consistent_part_optimization(ok, c, w);
    CnfFormula phi = build_formula(ok, c, w, s, true);
    CHECK(phi.size() == 0);
    CHECK(phi.num_vars() == 0);
    for (auto cw : s.consistent_witness)
      CHECK(cw >= 0);
  }
}

TEST_CASE("dimacs export") {
  CHECK(export_dimacs(CnfFormula{}) == "p cnf 0 0\n");
  CHECK(export_dimacs(std::vector<Clause>{}, 0) == "p cnf 0 0\n");

  Instance inst = flights();
  auto sigma = effective_constraints(inst.schema(), flights_constraints("tickets.constraints"), KeyPath::denial);
  CnfFormula phi = encode_denial(inst, sigma, flights_query("tickets.query"));
  DimacsFile cnf = parse_dimacs(export_dimacs(phi));
  CHECK_FALSE(cnf.weighted);
  CHECK(cnf.formula.num_vars == 16);
  CHECK(as_multiset(cnf.formula.hard) == all_clauses(phi));

  WcnfFormula psi = to_wcnf(phi);
  DimacsFile back = parse_dimacs(export_dimacs(psi));
  CHECK(back.weighted);
  CHECK(as_multiset(back.formula.hard) == as_multiset(psi.hard));
  REQUIRE(back.formula.soft.size() == psi.soft.size());
  for (std::size_t i = 0; i < psi.soft.size(); ++i) {
    CHECK(back.formula.soft[i].lits == psi.soft[i].lits);
    CHECK(back.formula.soft[i].weight == psi.soft[i].weight);
  }
}

TEST_CASE("clause normalization") {
  CnfFormula phi;
  phi.vars.num_vars = 3;
  CHECK(phi.add(ClauseRole::alpha, {3, -1, 3}));
  CHECK_FALSE(phi.add(ClauseRole::beta, {-1, 3}));
  CHECK_FALSE(phi.add(ClauseRole::beta, {2, -2}));
  CHECK(phi.size() == 1);
  CHECK(phi.clauses()[0] == Clause{-1, 3});
  CHECK(phi.role(0) == ClauseRole::alpha);
  CHECK_THROWS_AS(phi.add(ClauseRole::alpha, {}), std::logic_error);
}

TEST_CASE("semantic soundness against the repair oracle") {
  std::mt19937_64 rng(1234);
  for (int iter = 0; iter < 300; ++iter) {
    RandomProblemOptions opt;
    opt.max_facts = 9;
    opt.constraints = iter % 2 == 1;
    opt.boolean_only = iter % 3 == 0;
    Problem pb = random_problem(rng, opt);
    CAPTURE(pb.describe());
    auto cons = consistent_answers_bruteforce(pb.query, pb.instance, pb.constraints);
    WitnessIndex w = minimal_witnesses(pb.query, pb.instance);
    std::set<std::size_t> not_consistent;
    for (std::size_t l = 0; l < w.size(); ++l)
      if (std::find(cons.begin(), cons.end(), w.answers[l]) == cons.end())
        not_consistent.insert(l);

    for (KeyPath path : {KeyPath::native, KeyPath::denial}) {
      if (path == KeyPath::native && !pb.constraints.empty())
        continue;
      auto sigma = effective_constraints(pb.schema, pb.constraints, path);
      Conflicts c = compute_conflicts(pb.instance, sigma, path);
      CnfFormula phi = build_formula(pb.instance, c, w, full_scope(pb.instance, w), true);
      CHECK(refutable_answers(phi) == not_consistent);
      if (pb.query.is_boolean() && path == KeyPath::native) {
        CnfFormula b = encode_keys_boolean(pb.instance, pb.query);
        std::vector<Clause> cs(b.clauses().begin(), b.clauses().end());
        bool sat = sat_solve(cs, b.num_vars()).status == sat::Status::sat;
        CHECK(sat == !certain_bruteforce(pb.query, pb.instance, {}));
      }
    }
  }
}

TEST_CASE("formula size bounds") {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 300; ++iter) {
    RandomProblemOptions opt;
    opt.constraints = iter % 2 == 1;
    Problem pb = random_problem(rng, opt);
    CAPTURE(pb.describe());
    const std::size_t n = pb.instance.size();
    std::size_t d = 0, m = 0;
    for (const auto &cq : pb.query.disjuncts)
      d = std::max(d, cq.atoms.size());
    for (const auto &dc : pb.constraints)
      m = std::max(m, dc.atoms.size());
    m = std::max<std::size_t>(m, 2);
    KeyPath path = pb.constraints.empty() ? KeyPath::native : KeyPath::denial;
    auto sigma = effective_constraints(pb.schema, pb.constraints, path);
    CnfFormula phi = encode_denial(pb.instance, sigma, pb.query);
    if (path == KeyPath::native)
      phi = encode_keys_nonboolean(pb.instance, pb.query);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const Clause &c = phi.clauses()[i];
      for (int lit : c)
        CHECK((std::abs(lit) >= 1 && std::abs(lit) <= phi.num_vars()));
      switch (phi.role(i)) {
      case ClauseRole::alpha:
        CHECK(c.size() <= std::max(n, m));
        break;
      case ClauseRole::beta:
        CHECK(c.size() <= d + 1);
        break;
      case ClauseRole::theta:
        CHECK(c.size() <= m);
        break;
      default:
        break;
      }
    }
    if (path == KeyPath::native) {
      CHECK(phi.count(ClauseRole::alpha) <= n);
    } else {
      // gamma may collapse with duplicates, never exceed one per fact.
      CHECK(phi.count(ClauseRole::gamma) <= n);
      std::size_t ys = phi.vars.y.size();
      CHECK(phi.count(ClauseRole::theta) <= ys * m);
    }
    double bound = std::pow(static_cast<double>(std::max<std::size_t>(n, 2)), static_cast<double>(m + d));
    CHECK(static_cast<double>(phi.count(ClauseRole::beta)) <= bound);
  }
}

} // TEST_SUITE
