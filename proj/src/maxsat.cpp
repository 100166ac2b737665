#include "cqa/error.hpp"
#include "cqa/solver.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <numeric>

namespace cqa {

bool satisfies(const Clause &clause, const Model &model) {
  for (int l : clause) {
    auto v = static_cast<std::size_t>(std::abs(l));
    bool val = v < model.size() && model[v] != 0;
    if (val == (l > 0))
      return true;
  }
  return false;
}

bool satisfies(std::span<const Clause> clauses, const Model &model) {
  return std::all_of(clauses.begin(), clauses.end(), [&](const Clause &c) { return satisfies(c, model); });
}

std::uint64_t soft_cost(const WcnfFormula &psi, const Model &model) {
  std::uint64_t cost = 0;
  for (const auto &s : psi.soft)
    if (!satisfies(s.lits, model))
      cost += s.weight;
  return cost;
}

std::string_view to_string(MaxSatStatus s) {
  switch (s) {
  case MaxSatStatus::optimum:
    return "optimum";
  case MaxSatStatus::hard_unsat:
    return "hard-unsat";
  case MaxSatStatus::unknown:
    return "unknown";
  }
  return "?";
}

SatResult sat_solve(std::span<const Clause> clauses, int num_vars, const SolverConfig &config,
                    std::span<const int> assumptions) {
  sat::Solver s(config.seed);
  s.ensure_vars(num_vars);
  s.set_conflict_budget(config.conflict_budget);
  SatResult r;
  for (const auto &c : clauses)
    if (!s.add_clause(c)) {
      r.status = sat::Status::unsat;
      return r;
    }
  r.status = s.solve(assumptions);
  if (r.status == sat::Status::sat) {
    r.model = s.model();
    r.model.resize(static_cast<std::size_t>(num_vars) + 1, 0);
  }
  return r;
}

namespace {

/// Weighted totalizer with sums clipped at `cap`: output literal o_v is
/// forced true whenever the true inputs weigh at least v (after clipping).
class Totalizer {
public:
  using Outputs = std::map<std::uint64_t, int>;

  Totalizer(sat::Solver &s, std::uint64_t cap) : s_(s), cap_(cap) {}

  Outputs build(std::span<const std::pair<int, std::uint64_t>> inputs) {
    if (inputs.empty())
      return {};
    if (inputs.size() == 1) {
      Outputs o;
      o[std::min(inputs[0].second, cap_)] = inputs[0].first;
      return o;
    }
    std::size_t mid = inputs.size() / 2;
    Outputs a = build(inputs.subspan(0, mid));
    Outputs b = build(inputs.subspan(mid));
    return merge(a, b);
  }

private:
  Outputs merge(const Outputs &a, const Outputs &b) {
    Outputs out;
    auto lit_for = [&](std::uint64_t v) {
      auto [it, inserted] = out.try_emplace(v, 0);
      if (inserted)
        it->second = s_.new_var();
      return it->second;
    };
    for (auto [va, la] : a)
      s_.add_clause({-la, lit_for(std::min(va, cap_))});
    for (auto [vb, lb] : b)
      s_.add_clause({-lb, lit_for(std::min(vb, cap_))});
    for (auto [va, la] : a)
      for (auto [vb, lb] : b)
        s_.add_clause({-la, -lb, lit_for(std::min(va + vb, cap_))});
    return out;
  }

  sat::Solver &s_;
  std::uint64_t cap_;
};

/// Linear SAT-UNSAT search on a self-contained problem.
MaxSatResult linear_search(std::span<const Clause> hard, std::span<const SoftClause> soft, int num_vars,
                           const SolverConfig &config) {
  MaxSatResult r;
  sat::Solver s(config.seed);
  s.ensure_vars(num_vars);
  s.set_conflict_budget(config.conflict_budget);
  for (const auto &c : hard)
    if (!s.add_clause(c)) {
      r.status = MaxSatStatus::hard_unsat;
      return r;
    }
  std::vector<std::pair<int, std::uint64_t>> relax;
  for (const auto &sc : soft) {
    if (sc.lits.empty() || sc.weight == 0)
      continue;
    Clause c = sc.lits;
    if (!normalize_clause(c))
      continue;
    if (c.size() == 1) {
      relax.emplace_back(-c[0], sc.weight);
      s.set_polarity(std::abs(c[0]), c[0] > 0);
    } else {
      int b = s.new_var();
      c.push_back(b);
      s.add_clause(c);
      s.set_polarity(b, false);
      relax.emplace_back(b, sc.weight);
    }
  }
  WcnfFormula view;
  view.soft.assign(soft.begin(), soft.end());
  auto cost_of = [&](const Model &m) { return soft_cost(view, m); };

  ++r.sat_calls;
  auto st = s.solve();
  if (st == sat::Status::unsat) {
    r.status = MaxSatStatus::hard_unsat;
    return r;
  }
  if (st == sat::Status::unknown)
    return r;
  r.model = s.model();
  r.model.resize(static_cast<std::size_t>(num_vars) + 1);
  r.cost = cost_of(r.model);
  std::uint64_t fixed = 0;
  for (const auto &sc : soft)
    if (sc.lits.empty())
      fixed += sc.weight;
  if (r.cost == fixed || relax.empty()) {
    r.status = MaxSatStatus::optimum;
    return r;
  }
  std::uint64_t ub = r.cost - fixed; // relaxed weight of the best model
  Totalizer tot(s, ub);
  auto outputs = tot.build(relax);
  while (true) {
    for (auto it = outputs.lower_bound(ub); it != outputs.end(); ++it)
      s.add_clause({-it->second});
    ++r.sat_calls;
    st = s.solve();
    if (st == sat::Status::unsat) {
      r.status = MaxSatStatus::optimum;
      return r;
    }
    if (st == sat::Status::unknown)
      return r;
    Model m = s.model();
    m.resize(static_cast<std::size_t>(num_vars) + 1);
    std::uint64_t c = cost_of(m);
    r.model = std::move(m);
    r.cost = c;
    if (c == fixed) {
      r.status = MaxSatStatus::optimum;
      return r;
    }
    ub = c - fixed;
  }
}

struct Simplified {
  bool conflict = false;
  std::vector<std::int8_t> fixed; // by variable: 1, -1, or 0 when free
  std::vector<Clause> hard;
  std::vector<SoftClause> soft;
  std::uint64_t fixed_cost = 0;
};

/// Unit propagation at the root followed by clause simplification.
Simplified simplify(const WcnfFormula &psi) {
  Simplified out;
  const auto nv = static_cast<std::size_t>(psi.num_vars);
  out.fixed.assign(nv + 1, 0);
  std::vector<Clause> hard;
  hard.reserve(psi.hard.size());
  for (const auto &c : psi.hard) {
    Clause k = c;
    if (normalize_clause(k))
      hard.push_back(std::move(k));
  }
  auto idx = [](int lit) { return 2 * static_cast<std::size_t>(std::abs(lit)) + (lit < 0 ? 1 : 0); };
  std::vector<std::vector<std::uint32_t>> occ(2 * nv + 2);
  for (std::size_t i = 0; i < hard.size(); ++i)
    for (int l : hard[i])
      occ[idx(l)].push_back(static_cast<std::uint32_t>(i));
  std::vector<std::uint32_t> unassigned(hard.size());
  std::vector<char> sat(hard.size(), 0);
  std::vector<int> queue;
  auto value = [&](int lit) -> int {
    int v = out.fixed[static_cast<std::size_t>(std::abs(lit))];
    return lit > 0 ? v : -v;
  };
  auto assign = [&](int lit) {
    int v = value(lit);
    if (v > 0)
      return true;
    if (v < 0)
      return false;
    out.fixed[static_cast<std::size_t>(std::abs(lit))] = lit > 0 ? 1 : -1;
    queue.push_back(lit);
    return true;
  };
  // Decides an unsatisfied clause with at most one free literal.
  auto settle = [&](std::size_t i) {
    int free_lit = 0;
    for (int l : hard[i]) {
      int v = value(l);
      if (v > 0) {
        sat[i] = 1;
        return true;
      }
      if (v == 0)
        free_lit = l;
    }
    if (free_lit == 0)
      return false;
    return assign(free_lit);
  };
  for (std::size_t i = 0; i < hard.size(); ++i) {
    unassigned[i] = static_cast<std::uint32_t>(hard[i].size());
    if (hard[i].empty()) {
      out.conflict = true;
      return out;
    }
    if (hard[i].size() == 1 && !assign(hard[i][0])) {
      out.conflict = true;
      return out;
    }
  }
  for (std::size_t q = 0; q < queue.size(); ++q) {
    int lit = queue[q];
    for (auto i : occ[idx(lit)])
      sat[i] = 1;
    for (auto i : occ[idx(-lit)]) {
      if (sat[i])
        continue;
      if (--unassigned[i] <= 1 && !settle(i)) {
        out.conflict = true;
        return out;
      }
    }
  }
  for (std::size_t i = 0; i < hard.size(); ++i) {
    if (sat[i])
      continue;
    Clause k;
    bool satisfied = false;
    for (int l : hard[i]) {
      int v = value(l);
      if (v > 0) {
        satisfied = true;
        break;
      }
      if (v == 0)
        k.push_back(l);
    }
    if (!satisfied)
      out.hard.push_back(std::move(k));
  }
  for (const auto &sc : psi.soft) {
    Clause k;
    bool satisfied = false;
    Clause norm = sc.lits;
    if (!normalize_clause(norm))
      continue;
    for (int l : norm) {
      int v = value(l);
      if (v > 0) {
        satisfied = true;
        break;
      }
      if (v == 0)
        k.push_back(l);
    }
    if (satisfied)
      continue;
    if (k.empty())
      out.fixed_cost += sc.weight;
    else
      out.soft.push_back({std::move(k), sc.weight});
  }
  return out;
}

struct Component {
  std::vector<int> vars; // global variable of local variable i+1
  std::vector<Clause> hard;
  std::vector<SoftClause> soft;
};

std::vector<Component> split_components(const Simplified &simp, std::size_t nv) {
  std::vector<std::uint32_t> parent(nv + 1);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](const Clause &c) {
    for (std::size_t i = 1; i < c.size(); ++i) {
      auto a = find(static_cast<std::uint32_t>(std::abs(c[0])));
      auto b = find(static_cast<std::uint32_t>(std::abs(c[i])));
      if (a != b)
        parent[std::max(a, b)] = std::min(a, b);
    }
  };
  for (const auto &c : simp.hard)
    unite(c);
  for (const auto &s : simp.soft)
    unite(s.lits);

  std::vector<std::int32_t> comp_of_root(nv + 1, -1);
  std::vector<Component> comps;
  std::vector<int> local(nv + 1, 0);
  auto comp_for = [&](int lit) -> Component & {
    auto root = find(static_cast<std::uint32_t>(std::abs(lit)));
    if (comp_of_root[root] < 0) {
      comp_of_root[root] = static_cast<std::int32_t>(comps.size());
      comps.emplace_back();
    }
    return comps[static_cast<std::size_t>(comp_of_root[root])];
  };
  auto localize = [&](Component &comp, const Clause &c) {
    Clause out;
    out.reserve(c.size());
    for (int l : c) {
      auto v = static_cast<std::size_t>(std::abs(l));
      if (local[v] == 0) {
        comp.vars.push_back(static_cast<int>(v));
        local[v] = static_cast<int>(comp.vars.size());
      }
      out.push_back(l > 0 ? local[v] : -local[v]);
    }
    return out;
  };
  for (const auto &c : simp.hard) {
    auto &comp = comp_for(c[0]);
    comp.hard.push_back(localize(comp, c));
  }
  for (const auto &s : simp.soft) {
    auto &comp = comp_for(s.lits[0]);
    comp.soft.push_back({localize(comp, s.lits), s.weight});
  }
  return comps;
}

} // namespace

MaxSatResult maxsat_solve_serial(const WcnfFormula &psi, const SolverConfig &config) {
  auto r = linear_search(psi.hard, psi.soft, psi.num_vars, config);
  r.components = 1;
  return r;
}

MaxSatResult maxsat_solve(const WcnfFormula &psi, const SolverConfig &config, bool parallel) {
  MaxSatResult r;
  const auto nv = static_cast<std::size_t>(psi.num_vars);
  Simplified simp = simplify(psi);
  if (simp.conflict) {
    r.status = MaxSatStatus::hard_unsat;
    return r;
  }
  std::vector<Component> comps = split_components(simp, nv);
  std::vector<MaxSatResult> results(comps.size());
  std::vector<std::exception_ptr> errors(comps.size());
  const auto n = static_cast<std::ptrdiff_t>(comps.size());
  auto solve_one = [&](std::ptrdiff_t i) {
    try {
      const auto &c = comps[static_cast<std::size_t>(i)];
      results[static_cast<std::size_t>(i)] =
          linear_search(c.hard, c.soft, static_cast<int>(c.vars.size()), config);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      solve_one(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      solve_one(i);
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);

  r.components = comps.size();
  r.model.assign(nv + 1, 0);
  for (std::size_t v = 1; v <= nv; ++v)
    r.model[v] = simp.fixed[v] > 0 ? 1 : 0;
  bool unknown = false;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto &res = results[i];
    r.sat_calls += res.sat_calls;
    if (res.status == MaxSatStatus::hard_unsat) {
      r.status = MaxSatStatus::hard_unsat;
      r.model.clear();
      return r;
    }
    if (res.model.empty()) {
      r.status = MaxSatStatus::unknown;
      r.model.clear();
      return r;
    }
    if (res.status == MaxSatStatus::unknown)
      unknown = true;
    for (std::size_t k = 0; k < comps[i].vars.size(); ++k)
      r.model[static_cast<std::size_t>(comps[i].vars[k])] = res.model[k + 1];
  }
  if (!satisfies(psi.hard, r.model))
    throw SolverError("merged MaxSAT model violates a hard clause");
  r.cost = soft_cost(psi, r.model);
  r.status = unknown ? MaxSatStatus::unknown : MaxSatStatus::optimum;
  return r;
}

} // namespace cqa
