#include "cqa/datagen.hpp"
#include "cqa/error.hpp"
#include "cqa/oracle.hpp"

#include <doctest.h>

#include <filesystem>

using namespace cqa;
namespace fs = std::filesystem;

namespace {

std::size_t facts_in_groups(const Instance &inst, RelationId rel) {
  std::size_t n = 0;
  for (const auto &g : inst.key_equal_groups(rel))
    if (g.size() > 1)
      n += g.size();
  return n;
}

} // namespace

TEST_SUITE("datagen") {

TEST_CASE("catalog") {
  auto names = catalog_names();
  CHECK(names.size() == 27);
  CHECK(names.front() == "q1");
  CHECK(names.back() == "Q6");

  CatalogEntry q1 = query_catalog("q1");
  const auto &cq = q1.query.disjuncts.at(0);
  CHECK(cq.head == std::vector<std::string>{"z"});
  REQUIRE(cq.atoms.size() == 2);
  CHECK(cq.atoms[0].relation == "R1");
  CHECK(cq.atoms[1].relation == "R2");
  CHECK(q1.schema.at(q1.schema.id_of("R1")).key_positions == std::vector<std::size_t>{0});
  CHECK(q1.schema.at(q1.schema.id_of("R1")).attributes[2].kind == ValueKind::integer);

  CatalogEntry q8 = query_catalog("q8");
  CHECK(q8.query.disjuncts[0].head == std::vector<std::string>{"z", "w"});
  CHECK(q8.query.disjuncts[0].atoms[1].terms[1].variable() == "x");

  CHECK(query_catalog("q5").schema.at(query_catalog("q5").schema.id_of("R4")).key_positions ==
        std::vector<std::size_t>{0, 1});
  CHECK(query_catalog("q9").schema.at(query_catalog("q9").schema.id_of("R4")).key_positions ==
        std::vector<std::size_t>{0});

  CatalogEntry q5 = query_catalog("Q5");
  CHECK(q5.query.disjuncts.size() == 2);
  CHECK(q5.query.to_text().find("'Fail'") != std::string::npos);
  CHECK(q5.constraints.size() == 1);
  CHECK(query_catalog("Q1").query.is_boolean());

  for (const auto &n : names)
    CHECK_NOTHROW(query_catalog(n));
  CHECK_THROWS_AS(query_catalog("q22"), ValidationError);
}

TEST_CASE("inconsistency degree") {
  GenConfig cfg;
  cfg.rsize = 1000;
  cfg.indeg = 10;
  cfg.seed = 42;
  CatalogEntry e = query_catalog("q3");
  Generated g = generate(e, cfg);
  for (RelationId r = 0; r < e.schema.size(); ++r) {
    CAPTURE(e.schema.at(r).name);
    CHECK(g.instance.facts_of(r).size() == 1000);
    std::size_t in = facts_in_groups(g.instance, r);
    CHECK(in >= 99);
    CHECK(in <= 100);
    CHECK(g.report.relations[r].in_violation == in);
    // Injected rows follow the core, so each group holds exactly one core row.
    auto ids = g.instance.facts_of(r);
    FactId last_core = ids[g.report.relations[r].core - 1];
    for (const auto &grp : g.instance.key_equal_groups(r)) {
      if (grp.size() < 2)
        continue;
      std::size_t core_members = 0;
      for (FactId f : grp)
        core_members += f <= last_core;
      CHECK(core_members == 1);
    }
  }
}

TEST_CASE("no inconsistency gives a single repair") {
  GenConfig cfg;
  cfg.rsize = 500;
  cfg.indeg = 0;
  Generated g = generate(query_catalog("q1"), cfg);
  CHECK(enumerate_repairs(g.instance, {}).size() == 1);
  for (const auto &r : g.report.relations) {
    CHECK(r.injected == 0);
    CHECK(r.groups == 0);
  }
}

TEST_CASE("fixed group size") {
  GenConfig cfg;
  cfg.rsize = 100;
  cfg.indeg = 15;
  cfg.min_ksize = cfg.max_ksize = 2;
  Generated g = generate(query_catalog("q1"), cfg);
  for (RelationId r = 0; r < 2; ++r) {
    CHECK(facts_in_groups(g.instance, r) == 14);
    CHECK(g.report.relations[r].groups == 7);
    CHECK(g.report.relations[r].core == 93);
  }
  std::mt19937_64 rng(1);
  CHECK(plan_groups(15, 2, 2, rng) == std::vector<unsigned>(7, 2));
  CHECK(plan_groups(1, 2, 5, rng).empty());
  CHECK(plan_groups(0, 2, 5, rng).empty());
}

TEST_CASE("selectivity on the consistent core") {
  GenConfig cfg;
  cfg.rsize = 2000;
  for (const auto &name : catalog_names()) {
    CAPTURE(name);
    Generated g = generate(query_catalog(name), cfg);
    CHECK(g.report.selectivity >= 0.15);
    CHECK(g.report.selectivity <= 0.20);
  }
}

TEST_CASE("values follow the column kinds and ranges") {
  GenConfig cfg;
  cfg.rsize = 300;
  CatalogEntry e = query_catalog("q2");
  Generated g = generate(e, cfg);
  for (FactId f = 1; f <= g.instance.size(); ++f) {
    auto vals = g.instance.values_of(f);
    auto z = std::get<std::int64_t>(vals[2]);
    CHECK(z >= 1);
    CHECK(z <= 30);
    CHECK(std::get<std::string>(vals[0]).size() == 10);
  }
}

TEST_CASE("determinism and files") {
  GenConfig cfg;
  cfg.rsize = 400;
  cfg.seed = 9;
  CatalogEntry e = query_catalog("q12");
  Generated a = generate(e, cfg), b = generate(e, cfg);
  for (RelationId r = 0; r < e.schema.size(); ++r)
    CHECK(relation_to_csv(a.instance, r) == relation_to_csv(b.instance, r));
  cfg.seed = 10;
  Generated c = generate(e, cfg);
  CHECK(relation_to_csv(a.instance, 0) != relation_to_csv(c.instance, 0));

  fs::path dir = fs::temp_directory_path() / "cqa-test-gen";
  fs::remove_all(dir);
  write_generated(dir, e, a);
  Schema s = parse_schema(read_file(dir / "schema.txt"));
  Instance back = ingest(s, dir);
  CHECK(back.size() == a.instance.size());
  CHECK(parse_query(read_file(dir / "query.txt"), s).to_text() == e.query.to_text());
  CHECK(parse_constraints(read_file(dir / "constraints.txt"), s).empty());
  CHECK(gen_report_json(a.report).find("\"selectivity\"") != std::string::npos);
}

TEST_CASE("infeasible configurations") {
  CatalogEntry e = query_catalog("q1");
  GenConfig cfg;
  cfg.indeg = 101;
  CHECK_THROWS_AS(generate(e, cfg), ValidationError);
  cfg = {};
  cfg.min_ksize = 1;
  CHECK_THROWS_AS(generate(e, cfg), ValidationError);
  cfg = {};
  cfg.min_ksize = 4;
  cfg.max_ksize = 3;
  CHECK_THROWS_AS(generate(e, cfg), ValidationError);
  cfg = {};
  cfg.rsize = 0;
  CHECK_THROWS_AS(generate(e, cfg), ValidationError);
  cfg = {};
  cfg.selectivity = 2;
  CHECK_THROWS_AS(generate(e, cfg), ValidationError);
  cfg = {};
  cfg.indeg = 100;
  CHECK_NOTHROW(generate(e, cfg));
}

} // TEST_SUITE
