#pragma once

#include "cqa/query.hpp"
#include "cqa/relational.hpp"

#include <span>
#include <vector>

namespace cqa {

/// Ascending fact ids without duplicates.
using FactSet = std::vector<FactId>;

/// Pseudo fact id of the auxiliary always-present fact that stands in for the
/// near-violation of a fact forming a violation on its own.
inline constexpr FactId true_fact = 0;

/// Potential answers and, per answer, its subset-minimal witnesses.
struct WitnessIndex {
  std::vector<std::vector<ValueId>> answers;
  std::vector<std::vector<FactSet>> witnesses; // parallel to answers

  std::size_t size() const { return answers.size(); }
  /// Index of `answer` in `answers`, or size() when absent.
  std::size_t find(std::span<const ValueId> answer) const;
};

/// Minimal violations plus near-violations per fact id (index 0 unused).
struct ViolationIndex {
  std::vector<FactSet> violations;
  std::vector<std::vector<FactSet>> near;
};

/// Keeps only sets with no proper subset among the input; duplicates
/// collapse. Survivors keep their input order.
std::vector<FactSet> minimize_sets(std::vector<FactSet> sets);

/// Groups the witnesses of every disjunct by answer (first-discovery order
/// over disjuncts in written order) and subset-minimizes each group.
/// `parallel` runs the per-answer minimization with OpenMP.
WitnessIndex minimal_witnesses(const UnionQuery &q, const Instance &inst, bool parallel = true);

/// Subset-minimal union of the witness sets of every constraint body.
std::vector<FactSet> minimal_violations(std::span<const DenialConstraint> constraints, const Instance &inst);

/// near[i] = { V \ {i} : V in violations, i in V, |V| > 1 } plus {true_fact}
/// when {i} is itself a violation.
std::vector<std::vector<FactSet>> near_violations(std::span<const FactSet> violations, const Instance &inst);

ViolationIndex violation_index(std::span<const DenialConstraint> constraints, const Instance &inst);

/// Flags indexed by fact id: 1 when the fact occurs in no minimal violation.
std::vector<char> consistent_flags(std::span<const FactSet> violations, std::size_t num_facts);
/// Facts in no minimal violation, ascending.
std::vector<FactId> consistent_part(const Instance &inst, std::span<const DenialConstraint> constraints);

/// Connected components of the conflict hypergraph. Result is indexed by fact
/// id; facts in no violation get component 0, others 1..k.
std::vector<std::uint32_t> conflict_components(std::span<const FactSet> violations, std::size_t num_facts);

} // namespace cqa
