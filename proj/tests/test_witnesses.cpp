#include "fixtures.hpp"

#include "cqa/engine.hpp"
#include "cqa/oracle.hpp"
#include "cqa/witnesses.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace cqa;
using namespace cqa::testing;

namespace {

bool holds_on(const UnionQuery &q, const Instance &inst, const FactSet &facts, std::span<const ValueId> answer) {
  std::vector<char> allowed(inst.size() + 1, 0);
  for (FactId f : facts)
    allowed[f] = 1;
  for (const auto &a : answers(q, inst, allowed))
    if (std::equal(a.begin(), a.end(), answer.begin(), answer.end()))
      return true;
  return false;
}

std::vector<FactSet> proper_subsets_minus_one(const FactSet &s) {
  std::vector<FactSet> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    FactSet t = s;
    t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
    out.push_back(t);
  }
  return out;
}

} // namespace

TEST_SUITE("witnesses") {

TEST_CASE("set minimization") {
  auto m = minimize_sets({{1, 2, 3}, {2}, {4, 5}, {2, 4}, {4, 5}, {1, 3}});
  CHECK(m == std::vector<FactSet>{{2}, {4, 5}, {1, 3}});
  CHECK(minimize_sets({}).empty());
}

TEST_CASE("redundant atoms reduce to single facts") {
  Instance inst = make_instance("R(A text, B text)", {{"R", text_tuple({"a", "b"})}, {"R", text_tuple({"c", "d"})}});
  UnionQuery q = parse_query("q() :- R(x, y), R(x, y)", inst.schema());
  WitnessIndex w = minimal_witnesses(q, inst);
  REQUIRE(w.size() == 1);
  CHECK(w.witnesses[0] == std::vector<FactSet>{{1}, {2}});
  UnionQuery none = parse_query("q() :- R(x, 'zz')", inst.schema());
  CHECK(minimal_witnesses(none, inst).size() == 0);
}

TEST_CASE("consistent parts of the flight data") {
  Instance inst = flights();
  CHECK(consistent_part(inst, key_constraints(inst.schema())) == std::vector<FactId>{2, 4, 5, 6, 7});
  auto sigma = effective_constraints(inst.schema(), flights_constraints("tickets.constraints"), KeyPath::denial);
  auto v = minimal_violations(sigma, inst);
  auto comp = conflict_components(v, inst.size());
  CHECK(comp[2] == 0);
  CHECK(comp[1] == comp[3]);
  CHECK(comp[4] == comp[6]);
  CHECK(comp[6] == comp[9]);
  CHECK(comp[1] != comp[4]);
  CHECK(comp[8] != 0);
  CHECK(comp[8] != comp[4]);
}

TEST_CASE("violations of simple constraint shapes") {
  Instance ok = make_instance("R(A text, B text)", {{"R", text_tuple({"a", "b"})}, {"R", text_tuple({"c", "d"})}});
  auto fd = parse_constraints("!( R(x, y), R(x, z), y != z )", ok.schema());
  CHECK(minimal_violations(fd, ok).empty());
  auto near = near_violations({}, ok);
  for (const auto &n : near)
    CHECK(n.empty());
  CHECK(consistent_part(ok, fd) == std::vector<FactId>{1, 2});

  auto every = parse_constraints("!( R(x, y) )", ok.schema());
  CHECK(minimal_violations(every, ok) == std::vector<FactSet>{{1}, {2}});

  Instance three = make_instance("R(A text, B text)", {{"R", text_tuple({"f", "1"})},
                                                       {"R", text_tuple({"f", "2"})},
                                                       {"R", text_tuple({"f", "3"})}});
  std::vector<FactSet> vs{{1, 2}, {1, 3}};
  auto n = near_violations(vs, three);
  CHECK(n[1] == std::vector<FactSet>{{2}, {3}});
  CHECK(n[2] == std::vector<FactSet>{{1}});
}

TEST_CASE("witness and violation minimality on random instances") {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 200; ++iter) {
    Problem pb = random_problem(rng);
    CAPTURE(pb.describe());
    WitnessIndex w = minimal_witnesses(pb.query, pb.instance);
    CHECK(w.answers == answers(pb.query, pb.instance));
    WitnessIndex ws = minimal_witnesses(pb.query, pb.instance, false);
    CHECK(ws.answers == w.answers);
    CHECK(ws.witnesses == w.witnesses);
    for (std::size_t l = 0; l < w.size(); ++l) {
      for (const auto &s : w.witnesses[l]) {
        CHECK(holds_on(pb.query, pb.instance, s, w.answers[l]));
        for (const auto &t : proper_subsets_minus_one(s))
          CHECK_FALSE(holds_on(pb.query, pb.instance, t, w.answers[l]));
      }
      for (std::size_t i = 0; i < w.witnesses[l].size(); ++i)
        for (std::size_t j = 0; j < w.witnesses[l].size(); ++j)
          if (i != j)
            CHECK_FALSE(std::includes(w.witnesses[l][j].begin(), w.witnesses[l][j].end(),
                                      w.witnesses[l][i].begin(), w.witnesses[l][i].end()));
    }

    auto sigma = effective_constraints(pb.schema, pb.constraints, KeyPath::denial);
    ViolationIndex vi = violation_index(sigma, pb.instance);
    for (const auto &v : vi.violations) {
      CHECK_FALSE(is_consistent(pb.instance, pb.constraints, v));
      for (const auto &t : proper_subsets_minus_one(v))
        CHECK(is_consistent(pb.instance, pb.constraints, t));
    }
    for (FactId f = 1; f <= pb.instance.size(); ++f)
      for (const auto &n : vi.near[f]) {
        if (n == FactSet{true_fact})
          continue;
        CHECK(is_consistent(pb.instance, pb.constraints, n));
        FactSet u = n;
        u.push_back(f);
        std::sort(u.begin(), u.end());
        CHECK(std::find(vi.violations.begin(), vi.violations.end(), u) != vi.violations.end());
      }
    auto part = consistent_part(pb.instance, sigma);
    for (const auto &r : enumerate_repairs(pb.instance, pb.constraints))
      for (FactId f : part)
        CHECK(std::binary_search(r.begin(), r.end(), f));
  }
}

} // TEST_SUITE
