#pragma once

#include "cqa/query.hpp"
#include "cqa/relational.hpp"
#include "cqa/witnesses.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cqa {

/// Brute-force reference semantics. Keys declared in the schema are always
/// enforced (checked directly on key-equal pairs); `sigma` holds any further
/// denial constraints.

using RepairSet = std::vector<FactSet>;

inline constexpr std::size_t default_repair_cap = 1'000'000;

/// Flags indexed by fact id (entry 0 unused).
bool is_consistent(const Instance &inst, std::span<const DenialConstraint> sigma, std::span<const char> present);
bool is_consistent(const Instance &inst, std::span<const DenialConstraint> sigma, const FactSet &facts);

/// Consistent and maximal: adding any other fact of `inst` breaks consistency.
bool is_repair(const Instance &inst, std::span<const DenialConstraint> sigma, const FactSet &facts);

/// All subset repairs. Keys only: one fact per key-equal group. Otherwise a
/// depth-first search over include/exclude choices with consistency pruning
/// and a maximality check at the leaves. Throws Error when the bound on the
/// number of repairs (product of group sizes, resp. 2^#facts under
/// constraints) exceeds `cap`.
RepairSet enumerate_repairs(const Instance &inst, std::span<const DenialConstraint> sigma,
                            std::size_t cap = default_repair_cap);

/// Answers true in every repair, ordered as in answers(q, inst).
std::vector<std::vector<ValueId>> consistent_answers_bruteforce(const UnionQuery &q, const Instance &inst,
                                                                std::span<const DenialConstraint> sigma,
                                                                std::size_t cap = default_repair_cap);

/// Boolean query true in every repair.
bool certain_bruteforce(const UnionQuery &q, const Instance &inst, std::span<const DenialConstraint> sigma,
                        std::size_t cap = default_repair_cap);

// ---------------------------------------------------------------------------
// Random small problems for differential testing.

struct RandomProblemOptions {
  std::size_t max_facts = 12;
  std::size_t max_relations = 3;
  std::size_t max_constraints = 2;
  std::size_t max_constraint_atoms = 3;
  std::size_t max_query_atoms = 3;
  std::size_t max_head = 2;
  std::size_t max_disjuncts = 2;
  bool keys = true;          // allow schema keys
  bool constraints = true;   // allow extra denial constraints
  bool boolean_only = false; // head arity 0
};

struct Problem {
  Schema schema;
  Instance instance;
  std::vector<DenialConstraint> constraints;
  UnionQuery query;

  /// Schema, constraints, query and CSV data as text, parsable back.
  std::string describe() const;
};

/// Values come from a three-element integer domain so keys collide often.
Problem random_problem(std::mt19937_64 &rng, const RandomProblemOptions &options = {});

} // namespace cqa
