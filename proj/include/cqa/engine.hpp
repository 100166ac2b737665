#pragma once

#include "cqa/encoder.hpp"
#include "cqa/query.hpp"
#include "cqa/relational.hpp"
#include "cqa/solver.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cqa {

enum class Strategy : std::uint8_t {
  maxsat,       // repeated MaxSAT, eliminating every answer an optimum refutes
  iterative_sat // SAT with a clause over the remaining answer variables
};

enum class KeyPathChoice : std::uint8_t { automatic, native, denial };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view text);

struct EngineOptions {
  Strategy strategy = Strategy::maxsat;
  bool optimize = true;
  /// automatic: native when the only constraints are schema keys.
  KeyPathChoice key_path = KeyPathChoice::automatic;
  /// "internal" or a MaxSAT solver command taking a WCNF file argument.
  std::string solver = "internal";
  SolverConfig solver_config;
  /// OpenMP in witness minimization and component solving.
  bool parallel = true;
  /// Check every model against the complete initial formula.
  bool check_models = true;
  /// Build a falsifying repair for every refuted answer.
  bool decode_repairs = true;
};

enum class Verdict : std::uint8_t { consistent, inconsistent, unknown };
enum class DecidedBy : std::uint8_t { consistent_part, solver, none };

std::string_view to_string(Verdict v);
std::string_view to_string(DecidedBy d);

struct AnswerVerdict {
  std::vector<Value> values;
  Verdict verdict = Verdict::unknown;
  DecidedBy decided_by = DecidedBy::none;
  /// consistent_part: a witness made of facts in no violation.
  FactSet witness;
  /// Index into AnswerReport::repairs of a repair without this answer, or -1.
  std::ptrdiff_t repair = -1;
  /// Iteration in which the answer was refuted (1-based), 0 otherwise.
  std::size_t iteration = 0;
};

struct AnswerReport {
  std::vector<AnswerVerdict> answers; // potential answers, discovery order
  std::vector<FactSet> repairs;
  bool boolean = false;
  bool complete = true;
  Strategy strategy = Strategy::maxsat;
  bool optimize = true;
  KeyPath key_path = KeyPath::native;

  std::size_t iterations = 0;
  std::size_t solver_calls = 0;
  std::size_t variables = 0;
  std::size_t hard_clauses = 0;
  std::size_t soft_clauses = 0;
  std::size_t clauses() const { return hard_clauses + soft_clauses; }

  std::size_t facts = 0;
  std::size_t consistent_facts = 0;
  std::size_t witnesses = 0;
  std::size_t violations = 0;

  double encode_seconds = 0;
  double solve_seconds = 0;

  std::vector<std::vector<Value>> consistent() const;
  std::vector<std::vector<Value>> inconsistent() const;
  std::size_t count(Verdict v) const;
  /// Index of `answer`, or answers.size().
  std::size_t find(std::span<const Value> answer) const;
};

/// The constraints actually enforced: schema keys are implicit; the denial
/// path expands them into denial constraints and appends `sigma`.
std::vector<DenialConstraint> effective_constraints(const Schema &schema, std::span<const DenialConstraint> sigma,
                                                    KeyPath path);
KeyPath choose_key_path(std::span<const DenialConstraint> sigma, KeyPathChoice choice);

/// Consistent answers of q. `sigma` lists the denial constraints beyond the
/// schema keys. Solver budget exhaustion leaves answers `unknown` and the
/// report incomplete.
AnswerReport consistent_answers(const UnionQuery &q, const Instance &inst, std::span<const DenialConstraint> sigma,
                                const EngineOptions &options = {});

/// Whether the boolean query holds in every repair. Throws SolverError when
/// the solver gives up.
bool certain_boolean(const UnionQuery &q, const Instance &inst, std::span<const DenialConstraint> sigma,
                     const EngineOptions &options = {});

struct Explanation {
  Verdict verdict = Verdict::unknown;
  DecidedBy decided_by = DecidedBy::none;
  /// "witness" (facts supporting a consistent answer), "repair" (a repair in
  /// which the answer fails) or "none".
  std::string kind = "none";
  FactSet facts;
};

/// Provenance of a potential answer. Throws ValidationError for an answer
/// that is not a potential answer.
Explanation explain(const AnswerReport &report, std::span<const Value> answer);

std::string report_json(const AnswerReport &report, const Instance &inst, bool with_repairs = false);
std::string report_table(const AnswerReport &report);

} // namespace cqa
