#include "cqa/error.hpp"
#include "cqa/query.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace cqa {

namespace {

constexpr std::size_t no_index = std::numeric_limits<std::size_t>::max();
constexpr ValueId absent_value = std::numeric_limits<ValueId>::max();

struct Slot {
  enum class Kind : std::uint8_t { constant, bind, check } kind;
  std::size_t var = 0;       // bind / check
  ValueId value = 0;         // constant (absent_value when not in the instance)
};

struct PlannedAtom {
  RelationId relation = 0;
  std::vector<Slot> slots;
  std::size_t index_pos = no_index;
};

struct Operand {
  bool is_var = false;
  std::size_t var = 0;
  Value constant;
};

struct PlannedBuiltin {
  CompareOp op;
  Operand lhs, rhs;
};

struct Plan {
  std::vector<PlannedAtom> atoms;
  /// builtins_after[k]: checks that become decidable once atom k is matched.
  std::vector<std::vector<PlannedBuiltin>> builtins_after;
  std::vector<std::size_t> head_vars;
  std::size_t num_vars = 0;
  bool trivially_empty = false;
};

Plan make_plan(const ConjunctiveQuery &q, const Instance &inst) {
  Plan plan;
  std::map<std::string, std::size_t> var_ids;
  std::vector<std::size_t> bound_at; // atom index where each var gets bound
  const auto &schema = inst.schema();
  for (std::size_t k = 0; k < q.atoms.size(); ++k) {
    const auto &atom = q.atoms[k];
    PlannedAtom pa;
    pa.relation = schema.id_of(atom.relation);
    if (atom.terms.size() != schema.at(pa.relation).arity())
      throw ValidationError("arity mismatch in atom " + atom.to_text());
    for (std::size_t i = 0; i < atom.terms.size(); ++i) {
      const Term &t = atom.terms[i];
      Slot s{Slot::Kind::constant};
      if (!t.is_variable()) {
        auto id = inst.values().find(t.constant());
        s.value = id ? *id : absent_value;
        if (!id)
          plan.trivially_empty = true;
      } else {
        auto [it, inserted] = var_ids.try_emplace(t.variable(), var_ids.size());
        s.var = it->second;
        if (inserted) {
          s.kind = Slot::Kind::bind;
          bound_at.push_back(k);
        } else {
          s.kind = Slot::Kind::check;
        }
      }
      // A check against a variable bound inside this same atom cannot use the
      // index; constants and variables from earlier atoms can.
      bool usable = s.kind == Slot::Kind::constant || (s.kind == Slot::Kind::check && bound_at[s.var] < k);
      if (usable && pa.index_pos == no_index)
        pa.index_pos = i;
      pa.slots.push_back(s);
    }
    plan.atoms.push_back(std::move(pa));
  }
  plan.num_vars = var_ids.size();
  plan.builtins_after.resize(std::max<std::size_t>(q.atoms.size(), 1));
  for (const auto &b : q.builtins) {
    PlannedBuiltin pb{b.op, {}, {}};
    std::size_t ready = 0;
    auto operand = [&](const Term &t, Operand &o) {
      if (t.is_variable()) {
        auto it = var_ids.find(t.variable());
        if (it == var_ids.end())
          throw ValidationError("comparison variable '" + t.variable() + "' does not occur in a relational atom");
        o.is_var = true;
        o.var = it->second;
        ready = std::max(ready, bound_at[o.var]);
      } else {
        o.constant = t.constant();
      }
    };
    operand(b.lhs, pb.lhs);
    operand(b.rhs, pb.rhs);
    if (!pb.lhs.is_var && !pb.rhs.is_var) {
      if (!holds(pb.op, compare_values(pb.lhs.constant, pb.rhs.constant)))
        plan.trivially_empty = true;
      continue;
    }
    plan.builtins_after[ready].push_back(std::move(pb));
  }
  for (const auto &h : q.head) {
    auto it = var_ids.find(h);
    if (it == var_ids.end())
      throw ValidationError("unsafe query: head variable '" + h + "' does not occur in the body");
    plan.head_vars.push_back(it->second);
  }
  return plan;
}

struct VecHash {
  std::size_t operator()(const std::vector<std::uint32_t> &v) const {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v)
      h = (h ^ x) * 1099511628211ULL;
    return h;
  }
};

class Evaluator {
public:
  Evaluator(const Plan &plan, const Instance &inst, std::span<const char> allowed)
      : plan_(plan), inst_(inst), allowed_(allowed), binding_(plan.num_vars, absent_value) {
    std::vector<RelationId> seen_rel;
    for (const auto &a : plan_.atoms) {
      if (std::find(seen_rel.begin(), seen_rel.end(), a.relation) != seen_rel.end())
        dedup_ = true;
      seen_rel.push_back(a.relation);
      if (a.index_pos == no_index)
        continue;
      auto key = std::make_pair(a.relation, a.index_pos);
      if (indexes_.count(key))
        continue;
      auto &idx = indexes_[key];
      // Counting sort by value: facts with value v are ids[offsets[v] .. offsets[v+1]).
      idx.offsets.assign(inst_.values().size() + 2, 0);
      auto facts = inst_.facts_of(a.relation);
      for (FactId id : facts)
        if (is_allowed(id))
          ++idx.offsets[inst_.fact(id).values[a.index_pos] + 1];
      for (std::size_t v = 1; v < idx.offsets.size(); ++v)
        idx.offsets[v] += idx.offsets[v - 1];
      idx.ids.resize(idx.offsets.back());
      std::vector<std::uint32_t> next(idx.offsets.begin(), idx.offsets.end() - 1);
      for (FactId id : facts)
        if (is_allowed(id))
          idx.ids[next[inst_.fact(id).values[a.index_pos]]++] = id;
    }
  }

  std::vector<Witness> run() {
    if (!plan_.trivially_empty)
      match(0);
    return std::move(out_);
  }

private:
  bool is_allowed(FactId id) const { return allowed_.empty() || allowed_[id]; }

  const Value &operand_value(const Operand &o) const {
    return o.is_var ? inst_.value(binding_[o.var]) : o.constant;
  }

  bool builtins_hold(std::size_t k) const {
    for (const auto &b : plan_.builtins_after[k]) {
      if (b.op == CompareOp::eq && b.lhs.is_var && b.rhs.is_var) {
        if (binding_[b.lhs.var] != binding_[b.rhs.var])
          return false;
        continue;
      }
      if (!holds(b.op, compare_values(operand_value(b.lhs), operand_value(b.rhs))))
        return false;
    }
    return true;
  }

  void try_fact(std::size_t k, FactId id) {
    const PlannedAtom &a = plan_.atoms[k];
    const Fact &f = inst_.fact(id);
    // Bind into a scratch copy so a failed match leaves no residue.
    std::size_t bound_here[16];
    std::size_t nbound = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.slots.size() && ok; ++i) {
      const Slot &s = a.slots[i];
      switch (s.kind) {
      case Slot::Kind::constant:
        ok = f.values[i] == s.value;
        break;
      case Slot::Kind::check:
        ok = binding_[s.var] == f.values[i];
        break;
      case Slot::Kind::bind:
        binding_[s.var] = f.values[i];
        if (nbound < 16)
          bound_here[nbound++] = s.var;
        break;
      }
    }
    if (ok && builtins_hold(k)) {
      stack_.push_back(id);
      match(k + 1);
      stack_.pop_back();
    }
    for (std::size_t i = 0; i < nbound; ++i)
      binding_[bound_here[i]] = absent_value;
  }

  void match(std::size_t k) {
    if (k == plan_.atoms.size()) {
      emit();
      return;
    }
    const PlannedAtom &a = plan_.atoms[k];
    if (a.index_pos != no_index) {
      const Slot &s = a.slots[a.index_pos];
      ValueId key = s.kind == Slot::Kind::constant ? s.value : binding_[s.var];
      if (key == absent_value)
        return;
      const auto &idx = indexes_.at({a.relation, a.index_pos});
      for (auto i = idx.offsets[key]; i < idx.offsets[key + 1]; ++i)
        try_fact(k, idx.ids[i]);
    } else {
      for (FactId id : inst_.facts_of(a.relation))
        if (is_allowed(id))
          try_fact(k, id);
    }
  }

  void emit() {
    Witness w;
    w.answer.reserve(plan_.head_vars.size());
    for (auto v : plan_.head_vars)
      w.answer.push_back(binding_[v]);
    w.facts = stack_;
    std::sort(w.facts.begin(), w.facts.end());
    w.facts.erase(std::unique(w.facts.begin(), w.facts.end()), w.facts.end());
    if (!dedup_) {
      out_.push_back(std::move(w));
      return;
    }
    key_.assign(w.answer.begin(), w.answer.end());
    key_.push_back(absent_value);
    key_.insert(key_.end(), w.facts.begin(), w.facts.end());
    if (seen_.insert(key_).second)
      out_.push_back(std::move(w));
  }

  struct PairHash {
    std::size_t operator()(const std::pair<RelationId, std::size_t> &p) const {
      return std::hash<std::uint64_t>{}((std::uint64_t{p.first} << 32) ^ p.second);
    }
  };

  const Plan &plan_;
  const Instance &inst_;
  std::span<const char> allowed_;
  std::vector<ValueId> binding_;
  std::vector<FactId> stack_;
  struct Index {
    std::vector<std::uint32_t> offsets;
    std::vector<FactId> ids;
  };

  std::unordered_map<std::pair<RelationId, std::size_t>, Index, PairHash> indexes_;
  // Without a repeated relation every homomorphism has its own fact tuple.
  bool dedup_ = false;
  std::unordered_set<std::vector<std::uint32_t>, VecHash> seen_;
  std::vector<std::uint32_t> key_;
  std::vector<Witness> out_;
};

} // namespace

std::vector<Witness> evaluate(const ConjunctiveQuery &q, const Instance &inst, std::span<const char> allowed) {
  if (!allowed.empty() && allowed.size() < inst.size() + 1)
    throw ValidationError("evaluate: fact filter shorter than instance");
  for (const auto &a : q.atoms)
    if (a.terms.size() > 16)
      throw ValidationError("atoms wider than 16 attributes are not supported");
  Plan plan = make_plan(q, inst);
  Evaluator ev(plan, inst, allowed);
  return ev.run();
}

std::vector<std::vector<ValueId>> answers(const UnionQuery &q, const Instance &inst, std::span<const char> allowed) {
  std::vector<std::vector<ValueId>> out;
  std::unordered_set<std::vector<ValueId>, VecHash> seen;
  for (const auto &d : q.disjuncts)
    for (auto &w : evaluate(d, inst, allowed))
      if (seen.insert(w.answer).second)
        out.push_back(std::move(w.answer));
  return out;
}

} // namespace cqa
