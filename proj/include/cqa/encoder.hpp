#pragma once

#include "cqa/query.hpp"
#include "cqa/relational.hpp"
#include "cqa/witnesses.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cqa {

/// DIMACS literal list: +v / -v for variable v >= 1.
using Clause = std::vector<int>;

enum class ClauseRole : std::uint8_t {
  alpha, // conflict clauses: one per key-equal group or minimal violation
  beta,  // one per minimal witness (of an answer)
  gamma, // one per fact: present, or some near-violation fully present
  theta, // y <-> conjunction of a near-violation
  truth  // the unit clause fixing x_true
};

std::string_view to_string(ClauseRole role);

/// Variable numbering: x variables in fact id order, then p variables in
/// answer order, then y variables in (fact id, near-violation) order, then
/// x_true. Facts / answers outside the encoding scope get no variable.
struct VariableMap {
  std::vector<int> x; // by fact id (entry 0 unused); 0 = no variable
  std::vector<int> p; // by answer index; 0 = not encoded
  struct YVar {
    FactId fact = 0;
    std::size_t near_index = 0;
  };
  std::vector<YVar> y; // variable y_base + k  <->  y[k]
  int y_base = 0;
  int x_true = 0;
  int num_vars = 0;

  std::size_t num_x() const;
  std::size_t num_p() const;
  /// "x3", "p1", "y4.0", "x_true".
  std::string name(int var) const;
};

/// Role-tagged CNF. Clauses are stored with literals sorted by variable;
/// duplicate clauses are dropped (first role wins) and so are tautologies.
class CnfFormula {
public:
  VariableMap vars;

  /// Returns false when the clause was a tautology or a duplicate.
  /// Throws std::logic_error on an empty clause.
  bool add(ClauseRole role, Clause clause);

  std::span<const Clause> clauses() const { return clauses_; }
  ClauseRole role(std::size_t i) const { return roles_[i]; }
  std::size_t size() const { return clauses_.size(); }
  std::size_t count(ClauseRole role) const;
  std::vector<Clause> clauses_of(ClauseRole role) const;
  std::size_t literal_count() const;
  int num_vars() const { return vars.num_vars; }

private:
  struct ClauseHash {
    std::size_t operator()(const Clause &c) const;
  };
  std::vector<Clause> clauses_;
  std::vector<ClauseRole> roles_;
  std::unordered_set<Clause, ClauseHash> seen_;
};

/// Sorts literals by variable (negative first on ties) and removes repeats.
/// Returns false for a tautology.
bool normalize_clause(Clause &c);

struct SoftClause {
  Clause lits;
  std::uint64_t weight = 1;
};

struct WcnfFormula {
  int num_vars = 0;
  std::vector<Clause> hard;
  std::vector<SoftClause> soft;

  /// Sum of soft weights plus one.
  std::uint64_t top() const;
};

/// Every clause hard, plus a unit soft clause (p_l) of weight 1 for each
/// encoded answer.
WcnfFormula to_wcnf(const CnfFormula &phi);

/// `p cnf V C` text.
std::string export_dimacs(const CnfFormula &phi);
std::string export_dimacs(std::span<const Clause> clauses, int num_vars);
/// `p wcnf V C TOP` text; hard clauses carry weight TOP.
std::string export_dimacs(const WcnfFormula &psi);

/// Reads DIMACS CNF (all clauses hard), `p wcnf` with a top weight, or the
/// header-less format with `h` marking hard clauses.
struct DimacsFile {
  bool weighted = false;
  WcnfFormula formula;
};
DimacsFile parse_dimacs(std::string_view text);

// ---------------------------------------------------------------------------
// Reductions

enum class KeyPath : std::uint8_t {
  native, // key-equal groups give positive conflict clauses
  denial  // keys expanded to denial constraints, handled like any other
};

std::string_view to_string(KeyPath path);

/// Conflict structure of an instance under a constraint set.
struct Conflicts {
  KeyPath path = KeyPath::native;
  std::vector<std::vector<FactId>> groups; // native path: all key-equal groups
  ViolationIndex violations;               // denial path
  std::vector<char> consistent;            // by fact id: in no minimal violation
  std::vector<std::uint32_t> component;    // by fact id: 0 for consistent facts

  std::size_t num_consistent() const;
};

/// Native path: key-equal groups of the schema keys. Denial path:
/// minimal violations of `sigma` (which must already include any key DCs).
Conflicts compute_conflicts(const Instance &inst, std::span<const DenialConstraint> sigma, KeyPath path);

/// Which facts get x variables, which answers get p variables.
struct Scope {
  std::vector<char> fact_in;   // by fact id
  std::vector<char> answer_in; // by answer index
  /// Per answer: index of a witness lying entirely in the consistent part,
  /// or -1. Only filled by the optimized scope.
  std::vector<std::ptrdiff_t> consistent_witness;
  /// Drop literals of consistent facts from witness clauses.
  bool drop_consistent = false;
};

/// Every fact and every answer.
Scope full_scope(const Instance &inst, const WitnessIndex &w);

/// Answers with a witness inside the consistent part are decided at once.
/// The remaining answers keep only their inconsistent witness facts, closed
/// under conflict components so the encoded facts are a union of whole
/// components (which keeps the restricted encoding exact).
Scope apply_consistent_part_optimization(const Instance &inst, const Conflicts &c, const WitnessIndex &w);

/// Builds alpha/beta (and gamma/theta on the denial path) clauses over the
/// scope. `with_p` adds the answer variable to every witness clause.
CnfFormula build_formula(const Instance &inst, const Conflicts &c, const WitnessIndex &w, const Scope &scope,
                         bool with_p);

/// Reduction for a boolean query under keys: satisfiable iff some repair
/// falsifies q.
CnfFormula encode_keys_boolean(const Instance &inst, const UnionQuery &q);
/// Reduction for non-boolean queries under keys: some model sets p_l iff
/// answer l is not consistent.
CnfFormula encode_keys_nonboolean(const Instance &inst, const UnionQuery &q);
/// Reduction for denial constraints. Boolean queries get one pseudo-answer.
CnfFormula encode_denial(const Instance &inst, std::span<const DenialConstraint> sigma, const UnionQuery &q);

} // namespace cqa
