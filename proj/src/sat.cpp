#include "cqa/sat.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>

namespace cqa::sat {

namespace {

/// Luby sequence scaled by y: 1 1 2 1 1 2 4 ...
double luby(double y, int x) {
  int size = 1, seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  return std::pow(y, seq);
}

} // namespace

Solver::Solver(std::uint64_t seed) : rng_(seed) {}

int Solver::new_var() {
  auto v = static_cast<std::uint32_t>(assigns_.size());
  assigns_.push_back(0);
  level_.push_back(0);
  reason_.push_back(no_reason);
  polarity_.push_back(1); // 1: try false first
  activity_.push_back(0.0);
  seen_.push_back(0);
  watches_.emplace_back();
  watches_.emplace_back();
  heap_pos_.push_back(-1);
  heap_insert(v);
  return static_cast<int>(v) + 1;
}

void Solver::ensure_vars(int n) {
  while (num_vars() < n)
    new_var();
}

void Solver::set_polarity(int var, bool value) {
  ensure_vars(var);
  polarity_[static_cast<std::size_t>(var - 1)] = value ? 0 : 1;
}

Solver::CRef Solver::alloc_clause(std::span<const Lit> lits, bool learnt) {
  auto c = static_cast<CRef>(arena_.size());
  arena_.push_back(static_cast<std::uint32_t>(lits.size()));
  arena_.push_back(learnt ? 1u : 0u);
  float act = 0.0f;
  std::uint32_t bits;
  std::memcpy(&bits, &act, sizeof bits);
  arena_.push_back(bits);
  arena_.insert(arena_.end(), lits.begin(), lits.end());
  return c;
}

void Solver::attach(CRef c) {
  const Lit *l = clause_lits(c);
  watches_[neg(l[0])].push_back({c, l[1]});
  watches_[neg(l[1])].push_back({c, l[0]});
}

void Solver::remove_clause(CRef c) {
  arena_[c + 1] |= 2u;
  wasted_ += clause_size(c) + 3;
  // Watchers are dropped lazily in propagate() / compaction.
}

bool Solver::add_clause(std::span<const int> dimacs) {
  if (!ok_)
    return false;
  assert(decision_level() == 0);
  std::vector<Lit> lits;
  lits.reserve(dimacs.size());
  for (int d : dimacs) {
    if (d == 0)
      continue;
    ensure_vars(std::abs(d));
    lits.push_back(to_lit(d));
  }
  std::sort(lits.begin(), lits.end());
  std::vector<Lit> kept;
  Lit prev = 0xFFFFFFFFu;
  for (Lit l : lits) {
    if (l == prev)
      continue;
    if (prev != 0xFFFFFFFFu && l == neg(prev))
      return true; // tautology
    int v = lit_value(l);
    if (v > 0)
      return true; // satisfied at root
    if (v == 0)
      kept.push_back(l);
    prev = l;
  }
  if (kept.empty()) {
    ok_ = false;
    return false;
  }
  if (kept.size() == 1) {
    enqueue(kept[0], no_reason);
    if (propagate() != no_reason) {
      ok_ = false;
      return false;
    }
    return true;
  }
  CRef c = alloc_clause(kept, false);
  clauses_.push_back(c);
  attach(c);
  return true;
}

void Solver::enqueue(Lit l, CRef reason) {
  std::uint32_t v = var_of(l);
  assigns_[v] = (l & 1u) ? -1 : 1;
  level_[v] = decision_level();
  reason_[v] = reason;
  trail_.push_back(l);
}

Solver::CRef Solver::propagate() {
  CRef confl = no_reason;
  while (qhead_ < trail_.size()) {
    Lit p = trail_[qhead_++];
    Lit false_lit = neg(p);
    auto &ws = watches_[p];
    ++stats_.propagations;
    std::size_t i = 0, j = 0;
    const std::size_t n = ws.size();
    while (i < n) {
      Watcher w = ws[i];
      if (clause_deleted(w.cref)) {
        ++i;
        continue;
      }
      if (lit_value(w.blocker) > 0) {
        ws[j++] = ws[i++];
        continue;
      }
      Lit *c = clause_lits(w.cref);
      if (c[0] == false_lit)
        std::swap(c[0], c[1]);
      ++i;
      Lit first = c[0];
      if (first != w.blocker && lit_value(first) > 0) {
        ws[j++] = {w.cref, first};
        continue;
      }
      const std::uint32_t size = clause_size(w.cref);
      bool moved = false;
      for (std::uint32_t k = 2; k < size; ++k) {
        if (lit_value(c[k]) >= 0) {
          std::swap(c[1], c[k]);
          watches_[neg(c[1])].push_back({w.cref, first});
          moved = true;
          break;
        }
      }
      if (moved)
        continue;
      ws[j++] = {w.cref, first};
      if (lit_value(first) < 0) {
        confl = w.cref;
        qhead_ = trail_.size();
        while (i < n)
          ws[j++] = ws[i++];
      } else {
        enqueue(first, w.cref);
      }
    }
    ws.resize(j);
    if (confl != no_reason)
      break;
  }
  return confl;
}

bool Solver::lit_redundant_basic(Lit l) const {
  CRef r = reason_[var_of(l)];
  if (r == no_reason)
    return false;
  const Lit *c = clause_lits(r);
  for (std::uint32_t k = 0; k < clause_size(r); ++k) {
    std::uint32_t v = var_of(c[k]);
    if (v == var_of(l))
      continue;
    if (!seen_[v] && level_[v] > 0)
      return false;
  }
  return true;
}

void Solver::analyze(CRef confl, std::vector<Lit> &learnt, int &bt_level) {
  learnt.clear();
  learnt.push_back(0); // placeholder for the asserting literal
  int path = 0;
  Lit p = 0xFFFFFFFFu;
  std::size_t index = trail_.size();
  do {
    if (clause_learnt(confl))
      clause_bump(confl);
    const Lit *c = clause_lits(confl);
    for (std::uint32_t k = 0; k < clause_size(confl); ++k) {
      Lit q = c[k];
      if (p != 0xFFFFFFFFu && q == p)
        continue;
      std::uint32_t v = var_of(q);
      if (!seen_[v] && level_[v] > 0) {
        var_bump(v);
        seen_[v] = 1;
        if (level_[v] >= decision_level())
          ++path;
        else
          learnt.push_back(q);
      }
    }
    while (!seen_[var_of(trail_[--index])]) {
    }
    p = trail_[index];
    confl = reason_[var_of(p)];
    seen_[var_of(p)] = 0;
    --path;
  } while (path > 0);
  learnt[0] = neg(p);

  // Local minimization: drop literals implied by other learnt literals.
  to_clear_.assign(learnt.begin(), learnt.end());
  std::size_t j = 1;
  for (std::size_t i = 1; i < learnt.size(); ++i)
    if (!lit_redundant_basic(learnt[i]))
      learnt[j++] = learnt[i];
  learnt.resize(j);

  if (learnt.size() == 1) {
    bt_level = 0;
  } else {
    std::size_t max_i = 1;
    for (std::size_t i = 2; i < learnt.size(); ++i)
      if (level_[var_of(learnt[i])] > level_[var_of(learnt[max_i])])
        max_i = i;
    std::swap(learnt[1], learnt[max_i]);
    bt_level = level_[var_of(learnt[1])];
  }
  for (Lit l : to_clear_)
    seen_[var_of(l)] = 0;
}

void Solver::cancel_until(int level) {
  if (decision_level() <= level)
    return;
  for (std::size_t c = trail_.size(); c-- > trail_lim_[static_cast<std::size_t>(level)];) {
    std::uint32_t v = var_of(trail_[c]);
    assigns_[v] = 0;
    reason_[v] = no_reason;
    polarity_[v] = trail_[c] & 1u;
    if (heap_pos_[v] < 0)
      heap_insert(v);
  }
  trail_.resize(trail_lim_[static_cast<std::size_t>(level)]);
  trail_lim_.resize(static_cast<std::size_t>(level));
  qhead_ = trail_.size();
}

Solver::Lit Solver::pick_branch() {
  std::uint32_t next = 0xFFFFFFFFu;
  if (!heap_.empty() && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < 0.01) {
    next = heap_[std::uniform_int_distribution<std::size_t>(0, heap_.size() - 1)(rng_)];
    if (assigns_[next] != 0)
      next = 0xFFFFFFFFu;
  }
  while (next == 0xFFFFFFFFu || assigns_[next] != 0) {
    if (heap_.empty())
      return 0xFFFFFFFFu;
    next = heap_pop();
  }
  return 2 * next + (polarity_[next] ? 1u : 0u);
}

void Solver::var_bump(std::uint32_t v) {
  if ((activity_[v] += var_inc_) > 1e100) {
    for (auto &a : activity_)
      a *= 1e-100;
    var_inc_ *= 1e-100;
  }
  if (heap_pos_[v] >= 0)
    heap_up(static_cast<std::size_t>(heap_pos_[v]));
}

void Solver::clause_bump(CRef c) {
  float &a = clause_activity(c);
  a += static_cast<float>(cla_inc_);
  if (a > 1e20f) {
    for (CRef l : learnts_)
      clause_activity(l) *= 1e-20f;
    cla_inc_ *= 1e-20;
  }
}

void Solver::heap_insert(std::uint32_t v) {
  heap_pos_[v] = static_cast<int>(heap_.size());
  heap_.push_back(v);
  heap_up(heap_.size() - 1);
}

void Solver::heap_up(std::size_t i) {
  std::uint32_t v = heap_[i];
  while (i > 0) {
    std::size_t parent = (i - 1) / 2;
    if (!heap_less(v, heap_[parent]))
      break;
    heap_[i] = heap_[parent];
    heap_pos_[heap_[i]] = static_cast<int>(i);
    i = parent;
  }
  heap_[i] = v;
  heap_pos_[v] = static_cast<int>(i);
}

void Solver::heap_down(std::size_t i) {
  std::uint32_t v = heap_[i];
  const std::size_t n = heap_.size();
  while (2 * i + 1 < n) {
    std::size_t child = 2 * i + 1;
    if (child + 1 < n && heap_less(heap_[child + 1], heap_[child]))
      ++child;
    if (!heap_less(heap_[child], v))
      break;
    heap_[i] = heap_[child];
    heap_pos_[heap_[i]] = static_cast<int>(i);
    i = child;
  }
  heap_[i] = v;
  heap_pos_[v] = static_cast<int>(i);
}

std::uint32_t Solver::heap_pop() {
  std::uint32_t top = heap_[0];
  heap_pos_[top] = -1;
  std::uint32_t last = heap_.back();
  heap_.pop_back();
  if (!heap_.empty()) {
    heap_[0] = last;
    heap_pos_[last] = 0;
    heap_down(0);
  }
  return top;
}

void Solver::reduce_db() {
  // Only called at decision level 0, where no learnt clause is a live reason.
  std::sort(learnts_.begin(), learnts_.end(), [&](CRef a, CRef b) {
    bool a_bin = clause_size(a) == 2, b_bin = clause_size(b) == 2;
    if (a_bin != b_bin)
      return !a_bin;
    return clause_activity(a) < clause_activity(b);
  });
  std::size_t half = learnts_.size() / 2;
  std::size_t j = 0;
  for (std::size_t i = 0; i < learnts_.size(); ++i) {
    CRef c = learnts_[i];
    if (i < half && clause_size(c) > 2)
      remove_clause(c);
    else
      learnts_[j++] = c;
  }
  learnts_.resize(j);
  maybe_compact();
}

void Solver::maybe_compact() {
  if (wasted_ * 2 < arena_.size())
    return;
  std::vector<std::uint32_t> fresh;
  fresh.reserve(arena_.size() - wasted_);
  auto move_list = [&](std::vector<CRef> &list) {
    std::size_t j = 0;
    for (CRef c : list) {
      if (clause_deleted(c))
        continue;
      auto nc = static_cast<CRef>(fresh.size());
      fresh.insert(fresh.end(), arena_.begin() + c, arena_.begin() + c + 3 + clause_size(c));
      list[j++] = nc;
    }
    list.resize(j);
  };
  move_list(clauses_);
  move_list(learnts_);
  arena_.swap(fresh);
  wasted_ = 0;
  for (auto &w : watches_)
    w.clear();
  for (CRef c : clauses_)
    attach(c);
  for (CRef c : learnts_)
    attach(c);
  for (std::size_t i = 0; i < trail_.size(); ++i)
    reason_[var_of(trail_[i])] = no_reason; // level 0 only
}

Status Solver::search(std::int64_t conflicts_allowed, std::span<const Lit> assumptions) {
  std::vector<Lit> learnt;
  std::int64_t conflicts = 0;
  while (true) {
    CRef confl = propagate();
    if (confl != no_reason) {
      ++stats_.conflicts;
      ++conflicts;
      if (decision_level() == 0) {
        ok_ = false;
        return Status::unsat;
      }
      int bt = 0;
      analyze(confl, learnt, bt);
      cancel_until(bt);
      if (learnt.size() == 1) {
        enqueue(learnt[0], no_reason);
      } else {
        CRef c = alloc_clause(learnt, true);
        learnts_.push_back(c);
        attach(c);
        clause_bump(c);
        enqueue(learnt[0], c);
      }
      var_decay();
      clause_decay();
      continue;
    }
    if (conflicts_allowed >= 0 && conflicts >= conflicts_allowed) {
      cancel_until(0);
      return Status::unknown; // restart
    }
    if (budget_ >= 0 && static_cast<std::int64_t>(stats_.conflicts) >= budget_) {
      cancel_until(0);
      return Status::unknown;
    }
    Lit next = 0xFFFFFFFFu;
    while (static_cast<std::size_t>(decision_level()) < assumptions.size()) {
      Lit p = assumptions[static_cast<std::size_t>(decision_level())];
      int v = lit_value(p);
      if (v > 0) {
        trail_lim_.push_back(trail_.size()); // dummy level
      } else if (v < 0) {
        cancel_until(0);
        return Status::unsat;
      } else {
        next = p;
        break;
      }
    }
    if (next == 0xFFFFFFFFu) {
      ++stats_.decisions;
      next = pick_branch();
      if (next == 0xFFFFFFFFu) {
        model_.assign(assigns_.size() + 1, 0);
        for (std::size_t v = 0; v < assigns_.size(); ++v)
          model_[v + 1] = assigns_[v] > 0 ? 1 : 0;
        cancel_until(0);
        return Status::sat;
      }
    }
    trail_lim_.push_back(trail_.size());
    enqueue(next, no_reason);
  }
}

Status Solver::solve(std::span<const int> assumptions) {
  ++stats_.solves;
  model_.clear();
  if (!ok_)
    return Status::unsat;
  std::vector<Lit> assume;
  assume.reserve(assumptions.size());
  for (int a : assumptions) {
    ensure_vars(std::abs(a));
    assume.push_back(to_lit(a));
  }
  if (propagate() != no_reason) {
    ok_ = false;
    return Status::unsat;
  }
  const std::uint64_t start_conflicts = stats_.conflicts;
  const std::int64_t saved_budget = budget_;
  if (budget_ >= 0)
    budget_ = static_cast<std::int64_t>(start_conflicts) + budget_;
  if (max_learnts_ < 1)
    max_learnts_ = std::max<double>(static_cast<double>(clauses_.size()) / 3.0, 2000.0);
  Status status = Status::unknown;
  for (int restart = 0;; ++restart) {
    auto allowed = static_cast<std::int64_t>(luby(2.0, restart) * 100);
    status = search(allowed, assume);
    if (status != Status::unknown)
      break;
    if (budget_ >= 0 && static_cast<std::int64_t>(stats_.conflicts) >= budget_)
      break;
    ++stats_.restarts;
    if (static_cast<double>(learnts_.size()) >= max_learnts_) {
      reduce_db();
      max_learnts_ *= 1.1;
    }
  }
  budget_ = saved_budget;
  cancel_until(0);
  return status;
}

} // namespace cqa::sat
