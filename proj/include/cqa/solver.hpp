#pragma once

#include "cqa/encoder.hpp"
#include "cqa/sat.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cqa {

struct SolverConfig {
  std::uint64_t seed = 0;
  /// Conflicts allowed per SAT call; negative means unlimited.
  std::int64_t conflict_budget = -1;
};

/// Assignment indexed by variable; entry 0 unused.
using Model = std::vector<char>;

bool satisfies(const Clause &clause, const Model &model);
bool satisfies(std::span<const Clause> clauses, const Model &model);
/// Total weight of soft clauses the model falsifies.
std::uint64_t soft_cost(const WcnfFormula &psi, const Model &model);

struct SatResult {
  sat::Status status = sat::Status::unknown;
  Model model; // filled when sat
};

SatResult sat_solve(std::span<const Clause> clauses, int num_vars, const SolverConfig &config = {},
                    std::span<const int> assumptions = {});

enum class MaxSatStatus : std::uint8_t { optimum, hard_unsat, unknown };
std::string_view to_string(MaxSatStatus s);

struct MaxSatResult {
  MaxSatStatus status = MaxSatStatus::unknown;
  std::uint64_t cost = 0; // of `model`; optimal when status == optimum
  Model model;            // best model found (empty when none)
  std::size_t sat_calls = 0;
  std::size_t components = 0;
};

/// Reference: one linear SAT-UNSAT search over the whole formula. Each soft
/// clause gets a relaxation literal; a weighted totalizer capped at the
/// current cost tightens the bound until the formula turns unsatisfiable.
MaxSatResult maxsat_solve_serial(const WcnfFormula &psi, const SolverConfig &config = {});

/// Root-level unit propagation, then independent connected components
/// (sharing no variable) solved by the reference search, across OpenMP
/// threads when `parallel`. The merged model is checked against every hard
/// clause.
MaxSatResult maxsat_solve(const WcnfFormula &psi, const SolverConfig &config = {}, bool parallel = true);

/// Writes psi to a temporary file, runs `command <file>`, parses the
/// `s`/`o`/`v` lines and verifies the model locally. Accepted exit codes:
/// 0 and the competition codes 10, 20, 30.
MaxSatResult external_solve(const std::string &command, const WcnfFormula &psi);

/// Parses solver output for psi. `v` lines may list literals or one 0/1
/// string. Throws SolverError (with the raw output) when the output is
/// malformed, the model breaks a hard clause or the reported cost is wrong.
MaxSatResult parse_solver_output(std::string_view output, const WcnfFormula &psi);

/// `s`/`o`/`v` text for a result. `weighted` selects `s OPTIMUM FOUND` and
/// an `o` line over `s SATISFIABLE`.
std::string format_solution(const MaxSatResult &result, int num_vars, bool weighted);

} // namespace cqa
