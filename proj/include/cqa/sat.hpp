#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cqa::sat {

enum class Status : std::uint8_t { sat, unsat, unknown };

struct Stats {
  std::uint64_t solves = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t decisions = 0;
  std::uint64_t propagations = 0;
  std::uint64_t restarts = 0;
};

/// Conflict-driven clause learning solver over DIMACS-style literals
/// (variable v >= 1, literal +v / -v). Two watched literals, VSIDS branching
/// with phase saving, Luby restarts, activity-based learnt clause deletion.
/// Incremental: clauses may be added between solve() calls.
class Solver {
public:
  explicit Solver(std::uint64_t seed = 0);

  /// Allocates a fresh variable and returns its 1-based index.
  int new_var();
  /// Makes sure variables 1..n exist.
  void ensure_vars(int n);
  int num_vars() const { return static_cast<int>(assigns_.size()); }

  /// Adds a clause. Returns false once the clause set is unsatisfiable at
  /// the root (the solver then answers unsat forever).
  bool add_clause(std::span<const int> lits);
  bool add_clause(std::initializer_list<int> lits) { return add_clause(std::span<const int>(lits.begin(), lits.size())); }

  /// Solves under the given assumption literals. Budget exhaustion yields
  /// Status::unknown, never a wrong verdict.
  Status solve(std::span<const int> assumptions = {});

  /// Model value of `var` after a sat answer.
  bool value(int var) const { return model_.at(static_cast<std::size_t>(var)) != 0; }
  /// Model indexed by variable (entry 0 unused).
  const std::vector<char> &model() const { return model_; }

  /// Maximum number of conflicts per solve() call; negative means unlimited.
  void set_conflict_budget(std::int64_t conflicts) { budget_ = conflicts; }
  /// Preferred first value tried for `var` when branching.
  void set_polarity(int var, bool value);
  bool okay() const { return ok_; }
  const Stats &stats() const { return stats_; }

private:
  using Lit = std::uint32_t;
  using CRef = std::uint32_t;
  static constexpr CRef no_reason = 0xFFFFFFFFu;

  struct Watcher {
    CRef cref;
    Lit blocker;
  };

  static Lit neg(Lit l) { return l ^ 1u; }
  static std::uint32_t var_of(Lit l) { return l >> 1; }
  static Lit to_lit(int dimacs) {
    return dimacs > 0 ? static_cast<Lit>(2 * (dimacs - 1)) : static_cast<Lit>(2 * (-dimacs - 1) + 1);
  }
  /// 1 true, -1 false, 0 unassigned.
  int lit_value(Lit l) const {
    int v = assigns_[var_of(l)];
    return (l & 1u) ? -v : v;
  }

  // Clause arena layout: [size][flags][activity bits][lits...]
  std::uint32_t clause_size(CRef c) const { return arena_[c]; }
  bool clause_learnt(CRef c) const { return arena_[c + 1] & 1u; }
  bool clause_deleted(CRef c) const { return arena_[c + 1] & 2u; }
  Lit *clause_lits(CRef c) { return &arena_[c + 3]; }
  const Lit *clause_lits(CRef c) const { return &arena_[c + 3]; }
  float &clause_activity(CRef c) { return *reinterpret_cast<float *>(&arena_[c + 2]); }

  CRef alloc_clause(std::span<const Lit> lits, bool learnt);
  void attach(CRef c);
  void remove_clause(CRef c);

  void enqueue(Lit l, CRef reason);
  CRef propagate();
  void analyze(CRef confl, std::vector<Lit> &learnt, int &bt_level);
  bool lit_redundant_basic(Lit l) const;
  void cancel_until(int level);
  int decision_level() const { return static_cast<int>(trail_lim_.size()); }
  Lit pick_branch();
  Status search(std::int64_t conflicts_allowed, std::span<const Lit> assumptions);
  void reduce_db();
  void maybe_compact();

  void var_bump(std::uint32_t v);
  void var_decay() { var_inc_ /= 0.95; }
  void clause_bump(CRef c);
  void clause_decay() { cla_inc_ /= 0.999; }

  // heap on activity
  void heap_insert(std::uint32_t v);
  void heap_up(std::size_t i);
  void heap_down(std::size_t i);
  std::uint32_t heap_pop();
  bool heap_less(std::uint32_t a, std::uint32_t b) const { return activity_[a] > activity_[b]; }

  bool ok_ = true;
  std::vector<std::uint32_t> arena_;
  std::size_t wasted_ = 0;
  std::vector<CRef> clauses_;
  std::vector<CRef> learnts_;
  std::vector<std::vector<Watcher>> watches_;

  std::vector<std::int8_t> assigns_;
  std::vector<int> level_;
  std::vector<CRef> reason_;
  std::vector<char> polarity_;
  std::vector<double> activity_;
  std::vector<char> seen_;
  std::vector<Lit> to_clear_;
  std::vector<Lit> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;

  std::vector<std::uint32_t> heap_;
  std::vector<int> heap_pos_;

  double var_inc_ = 1.0;
  double cla_inc_ = 1.0;
  double max_learnts_ = 0;
  std::int64_t budget_ = -1;
  std::vector<char> model_;
  std::mt19937_64 rng_;
  Stats stats_;
};

} // namespace cqa::sat
