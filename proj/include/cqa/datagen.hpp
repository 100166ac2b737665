#pragma once

#include "cqa/query.hpp"
#include "cqa/relational.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cqa {

/// A benchmark query with the schema (keys included) it runs against.
struct CatalogEntry {
  std::string name;
  Schema schema;
  UnionQuery query;
  std::vector<DenialConstraint> constraints; // beyond the schema keys
};

/// q1..q21 over R1..R7 (R4's key depends on the query), then Q1..Q6 over the
/// restaurant inspection schema with its name -> zip dependency.
std::vector<std::string> catalog_names();
/// Throws ValidationError for an unknown name.
CatalogEntry query_catalog(std::string_view name);

struct GenConfig {
  std::size_t rsize = 1000;   // tuples per relation
  double indeg = 10;          // percent of tuples in a key-equal group of size > 1
  unsigned min_ksize = 2;     // key-equal group sizes are uniform in [min_ksize, max_ksize]
  unsigned max_ksize = 5;
  double selectivity = 0.175; // planted query matches on the consistent core, as a fraction of rsize
  std::uint64_t seed = 1;
};

struct RelationStats {
  std::string relation;
  std::size_t rows = 0;
  std::size_t core = 0;     // consistent rows before injection
  std::size_t injected = 0; // rows added to existing key-equal groups
  std::size_t groups = 0;   // key-equal groups of size > 1
  std::size_t in_violation = 0;
  std::size_t planted = 0; // core rows taking part in a planted match
};

struct GenReport {
  std::vector<RelationStats> relations;
  std::size_t core_witnesses = 0; // query witnesses using core rows only
  double selectivity = 0;         // core_witnesses / rsize
};

struct Generated {
  Instance instance;
  GenReport report;
};

/// Consistent core with planted matches, then key-violating injection:
/// round(rsize * indeg / 100) participating tuples are split greedily into
/// groups of drawn size (a final remainder of one is dropped); each group
/// keeps one core tuple and adds size - 1 tuples sharing its key.
/// Throws ValidationError on an infeasible configuration.
Generated generate(const CatalogEntry &entry, const GenConfig &config);

/// Group sizes for `participating` tuples under the greedy rule; a draw
/// larger than what is left is clamped.
std::vector<unsigned> plan_groups(std::size_t participating, unsigned min_ksize, unsigned max_ksize,
                                  std::mt19937_64 &rng);

/// `<dir>/<Relation>.csv`, schema.txt, query.txt and constraints.txt.
void write_generated(const std::filesystem::path &dir, const CatalogEntry &entry, const Generated &g);

std::string gen_report_json(const GenReport &report);

} // namespace cqa
