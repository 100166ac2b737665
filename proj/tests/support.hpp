#pragma once

#include "cqa/encoder.hpp"
#include "cqa/solver.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

namespace cqa::testing {

/// Clause as positive / negative variable bitmasks (variables 1..20 map to bits 0..19).
struct MaskClause {
  std::uint32_t pos = 0, neg = 0;
  bool sat(std::uint32_t a) const { return ((a & pos) | (~a & neg)) != 0; }
};

inline MaskClause to_mask(const Clause &c) {
  MaskClause m;
  for (int l : c) {
    std::uint32_t bit = 1u << (std::abs(l) - 1);
    (l > 0 ? m.pos : m.neg) |= bit;
  }
  return m;
}

inline Model model_of(std::uint32_t a, int num_vars) {
  Model m(static_cast<std::size_t>(num_vars) + 1, 0);
  for (int v = 1; v <= num_vars; ++v)
    m[static_cast<std::size_t>(v)] = (a >> (v - 1)) & 1u;
  return m;
}

/// Exhaustive satisfiability check, at most 20 variables.
inline bool brute_sat(std::span<const Clause> clauses, int num_vars) {
  std::vector<MaskClause> ms;
  for (const auto &c : clauses)
    ms.push_back(to_mask(c));
  const std::uint32_t end = 1u << num_vars;
  for (std::uint32_t a = 0; a < end; ++a) {
    bool ok = true;
    for (const auto &m : ms)
      if (!m.sat(a)) {
        ok = false;
        break;
      }
    if (ok)
      return true;
  }
  return false;
}

/// Exhaustive minimum soft cost over hard-satisfying assignments; nullopt
/// when the hard clauses are unsatisfiable. At most 20 variables.
inline std::optional<std::uint64_t> brute_maxsat(const WcnfFormula &psi) {
  std::vector<MaskClause> hard, soft;
  std::vector<std::uint64_t> w;
  std::uint64_t always = 0;
  for (const auto &c : psi.hard)
    hard.push_back(to_mask(c));
  for (const auto &s : psi.soft) {
    if (s.lits.empty()) {
      always += s.weight;
      continue;
    }
    soft.push_back(to_mask(s.lits));
    w.push_back(s.weight);
  }
  std::optional<std::uint64_t> best;
  const std::uint32_t end = 1u << psi.num_vars;
  for (std::uint32_t a = 0; a < end; ++a) {
    bool ok = true;
    for (const auto &m : hard)
      if (!m.sat(a)) {
        ok = false;
        break;
      }
    if (!ok)
      continue;
    std::uint64_t cost = always;
    for (std::size_t i = 0; i < soft.size(); ++i)
      if (!soft[i].sat(a))
        cost += w[i];
    if (!best || cost < *best)
      best = cost;
  }
  return best;
}

inline Clause random_clause(std::mt19937_64 &rng, int num_vars, int width) {
  std::uniform_int_distribution<int> var(1, num_vars);
  std::bernoulli_distribution sign(0.5);
  Clause c;
  for (int k = 0; k < width; ++k) {
    int v = var(rng);
    c.push_back(sign(rng) ? v : -v);
  }
  return c;
}

/// Random CNF with clause widths 1..max_width, around the 3-SAT threshold.
inline std::vector<Clause> random_cnf(std::mt19937_64 &rng, int num_vars, int max_width = 3) {
  std::uniform_int_distribution<int> width(1, max_width);
  int m = std::max(1, static_cast<int>(num_vars * (max_width >= 3 ? 4.0 : 1.5)));
  std::uniform_int_distribution<int> count(1, m + 2);
  std::vector<Clause> out;
  int n = count(rng);
  for (int i = 0; i < n; ++i) {
    int w = width(rng);
    // Keep units rare so instances are not decided by propagation alone.
    if (w == 1 && std::bernoulli_distribution(0.7)(rng))
      w = 3;
    out.push_back(random_clause(rng, num_vars, w));
  }
  return out;
}

/// Random weighted partial instance: hard 2/3-clauses, soft clauses of
/// width 1..3 with weights 1..max_weight.
inline WcnfFormula random_wcnf(std::mt19937_64 &rng, int num_vars, std::uint64_t max_weight = 5) {
  WcnfFormula psi;
  psi.num_vars = num_vars;
  std::uniform_int_distribution<int> hard_count(0, 2 * num_vars + 1);
  std::uniform_int_distribution<int> soft_count(0, num_vars + 3);
  std::uniform_int_distribution<int> hw(2, 3), sw(1, 3);
  std::uniform_int_distribution<std::uint64_t> weight(1, max_weight);
  int h = hard_count(rng);
  for (int i = 0; i < h; ++i)
    psi.hard.push_back(random_clause(rng, num_vars, hw(rng)));
  int s = soft_count(rng);
  for (int i = 0; i < s; ++i)
    psi.soft.push_back({random_clause(rng, num_vars, sw(rng)), weight(rng)});
  return psi;
}

/// Clause multiset in normalized form, for order-insensitive comparison.
inline std::multiset<Clause> clause_multiset(std::span<const Clause> clauses) {
  std::multiset<Clause> out;
  for (Clause c : clauses) {
    normalize_clause(c);
    out.insert(std::move(c));
  }
  return out;
}

} // namespace cqa::testing
