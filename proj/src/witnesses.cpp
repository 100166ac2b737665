#include "cqa/witnesses.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace cqa {

namespace {

struct VecHash {
  std::size_t operator()(const std::vector<std::uint32_t> &v) const {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v)
      h = (h ^ x) * 1099511628211ULL;
    return h;
  }
};

bool is_subset(const FactSet &small, const FactSet &big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

} // namespace

std::size_t WitnessIndex::find(std::span<const ValueId> answer) const {
  for (std::size_t i = 0; i < answers.size(); ++i)
    if (std::equal(answers[i].begin(), answers[i].end(), answer.begin(), answer.end()))
      return i;
  return answers.size();
}

std::vector<FactSet> minimize_sets(std::vector<FactSet> sets) {
  if (sets.size() <= 1)
    return sets;
  // The empty set is a subset of everything.
  for (auto &s : sets)
    if (s.empty())
      return {FactSet{}};
  std::vector<std::size_t> order(sets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sets[a].size() < sets[b].size(); });
  // Kept sets indexed by member so a candidate only meets kept sets sharing an element.
  std::unordered_map<FactId, std::vector<std::size_t>> by_member;
  std::vector<char> keep(sets.size(), 0);
  for (std::size_t idx : order) {
    const FactSet &cand = sets[idx];
    bool dominated = false;
    for (FactId f : cand) {
      auto it = by_member.find(f);
      if (it == by_member.end())
        continue;
      for (std::size_t k : it->second)
        if (is_subset(sets[k], cand)) {
          dominated = true;
          break;
        }
      if (dominated)
        break;
    }
    if (dominated)
      continue;
    keep[idx] = 1;
    for (FactId f : cand)
      by_member[f].push_back(idx);
  }
  std::vector<FactSet> out;
  for (std::size_t i = 0; i < sets.size(); ++i)
    if (keep[i])
      out.push_back(std::move(sets[i]));
  return out;
}

WitnessIndex minimal_witnesses(const UnionQuery &q, const Instance &inst, bool parallel) {
  WitnessIndex idx;
  std::unordered_map<std::vector<ValueId>, std::size_t, VecHash> by_answer;
  for (const auto &d : q.disjuncts) {
    for (auto &w : evaluate(d, inst)) {
      auto [it, inserted] = by_answer.try_emplace(w.answer, idx.answers.size());
      if (inserted) {
        idx.answers.push_back(w.answer);
        idx.witnesses.emplace_back();
      }
      idx.witnesses[it->second].push_back(std::move(w.facts));
    }
  }
  const auto n = static_cast<std::ptrdiff_t>(idx.witnesses.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      idx.witnesses[i] = minimize_sets(std::move(idx.witnesses[i]));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      idx.witnesses[i] = minimize_sets(std::move(idx.witnesses[i]));
  }
  return idx;
}

std::vector<FactSet> minimal_violations(std::span<const DenialConstraint> constraints, const Instance &inst) {
  std::vector<FactSet> all;
  for (const auto &dc : constraints)
    for (auto &w : evaluate(dc.as_query(), inst))
      all.push_back(std::move(w.facts));
  return minimize_sets(std::move(all));
}

std::vector<std::vector<FactSet>> near_violations(std::span<const FactSet> violations, const Instance &inst) {
  std::vector<std::vector<FactSet>> near(inst.size() + 1);
  for (const FactSet &v : violations) {
    if (v.size() == 1) {
      near[v[0]].push_back(FactSet{true_fact});
      continue;
    }
    for (FactId f : v) {
      FactSet rest;
      rest.reserve(v.size() - 1);
      for (FactId g : v)
        if (g != f)
          rest.push_back(g);
      near[f].push_back(std::move(rest));
    }
  }
  return near;
}

ViolationIndex violation_index(std::span<const DenialConstraint> constraints, const Instance &inst) {
  ViolationIndex vi;
  vi.violations = minimal_violations(constraints, inst);
  vi.near = near_violations(vi.violations, inst);
  return vi;
}

std::vector<char> consistent_flags(std::span<const FactSet> violations, std::size_t num_facts) {
  std::vector<char> flags(num_facts + 1, 1);
  flags[0] = 0;
  for (const auto &v : violations)
    for (FactId f : v)
      flags[f] = 0;
  return flags;
}

std::vector<FactId> consistent_part(const Instance &inst, std::span<const DenialConstraint> constraints) {
  auto flags = consistent_flags(minimal_violations(constraints, inst), inst.size());
  std::vector<FactId> out;
  for (FactId f = 1; f <= inst.size(); ++f)
    if (flags[f])
      out.push_back(f);
  return out;
}

std::vector<std::uint32_t> conflict_components(std::span<const FactSet> violations, std::size_t num_facts) {
  std::vector<std::uint32_t> parent(num_facts + 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<char> involved(num_facts + 1, 0);
  for (const auto &v : violations) {
    for (FactId f : v)
      involved[f] = 1;
    for (std::size_t i = 1; i < v.size(); ++i) {
      auto a = find(v[0]), b = find(v[i]);
      if (a != b)
        parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<std::uint32_t> comp(num_facts + 1, 0);
  std::unordered_map<std::uint32_t, std::uint32_t> label;
  for (FactId f = 1; f <= num_facts; ++f) {
    if (!involved[f])
      continue;
    auto root = find(f);
    auto [it, inserted] = label.try_emplace(root, static_cast<std::uint32_t>(label.size() + 1));
    comp[f] = it->second;
  }
  return comp;
}

} // namespace cqa
