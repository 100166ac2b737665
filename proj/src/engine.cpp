#include "cqa/engine.hpp"

#include "cqa/error.hpp"
#include "cqa/witnesses.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <sstream>
#include <stdexcept>

namespace cqa {

std::string_view to_string(Strategy s) { return s == Strategy::maxsat ? "maxsat" : "iter-sat"; }

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "maxsat")
    return Strategy::maxsat;
  if (text == "iter-sat" || text == "iterative-sat")
    return Strategy::iterative_sat;
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
  case Verdict::consistent:
    return "consistent";
  case Verdict::inconsistent:
    return "inconsistent";
  case Verdict::unknown:
    return "unknown";
  }
  return "?";
}

std::string_view to_string(DecidedBy d) {
  switch (d) {
  case DecidedBy::consistent_part:
    return "consistent-part";
  case DecidedBy::solver:
    return "solver";
  case DecidedBy::none:
    return "none";
  }
  return "?";
}

std::vector<std::vector<Value>> AnswerReport::consistent() const {
  std::vector<std::vector<Value>> out;
  for (const auto &a : answers)
    if (a.verdict == Verdict::consistent)
      out.push_back(a.values);
  return out;
}

std::vector<std::vector<Value>> AnswerReport::inconsistent() const {
  std::vector<std::vector<Value>> out;
  for (const auto &a : answers)
    if (a.verdict == Verdict::inconsistent)
      out.push_back(a.values);
  return out;
}

std::size_t AnswerReport::count(Verdict v) const {
  return static_cast<std::size_t>(
      std::count_if(answers.begin(), answers.end(), [&](const AnswerVerdict &a) { return a.verdict == v; }));
}

std::size_t AnswerReport::find(std::span<const Value> answer) const {
  for (std::size_t i = 0; i < answers.size(); ++i)
    if (std::equal(answers[i].values.begin(), answers[i].values.end(), answer.begin(), answer.end()))
      return i;
  return answers.size();
}

KeyPath choose_key_path(std::span<const DenialConstraint> sigma, KeyPathChoice choice) {
  switch (choice) {
  case KeyPathChoice::native:
    if (!sigma.empty())
      throw ValidationError("the native key path handles schema keys only; use the denial path for denial constraints");
    return KeyPath::native;
  case KeyPathChoice::denial:
    return KeyPath::denial;
  case KeyPathChoice::automatic:
    break;
  }
  return sigma.empty() ? KeyPath::native : KeyPath::denial;
}

std::vector<DenialConstraint> effective_constraints(const Schema &schema, std::span<const DenialConstraint> sigma,
                                                    KeyPath path) {
  std::vector<DenialConstraint> out;
  if (path == KeyPath::denial)
    out = key_constraints(schema);
  out.insert(out.end(), sigma.begin(), sigma.end());
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

bool model_value(const Model &m, int var) {
  return var > 0 && static_cast<std::size_t>(var) < m.size() && m[static_cast<std::size_t>(var)] != 0;
}

/// A repair agreeing with the model's x variables on the encoded facts and
/// extended greedily (in fact id order) elsewhere.
FactSet decode_repair(const Instance &inst, const Conflicts &c, const VariableMap &vm, const Model &m) {
  FactSet r;
  const std::size_t n = inst.size();
  if (c.path == KeyPath::native) {
    for (const auto &g : c.groups) {
      FactId chosen = 0;
      bool encoded = false;
      for (FactId f : g) {
        if (vm.x[f] == 0)
          continue;
        encoded = true;
        if (model_value(m, vm.x[f])) {
          chosen = f;
          break;
        }
      }
      if (chosen == 0 && !encoded)
        chosen = g.front();
      if (chosen == 0)
        throw std::logic_error("model leaves a key-equal group empty");
      r.push_back(chosen);
    }
    std::sort(r.begin(), r.end());
    return r;
  }
  std::vector<char> in(n + 1, 0);
  for (FactId f = 1; f <= n; ++f)
    in[f] = c.consistent[f] || (vm.x[f] != 0 && model_value(m, vm.x[f]));
  for (FactId f = 1; f <= n; ++f) {
    if (in[f] || vm.x[f] != 0)
      continue;
    bool blocked = false;
    for (const auto &nv : c.violations.near[f]) {
      if (nv.size() == 1 && nv[0] == true_fact) {
        blocked = true;
        break;
      }
      if (std::all_of(nv.begin(), nv.end(), [&](FactId g) { return in[g] != 0; })) {
        blocked = true;
        break;
      }
    }
    if (!blocked)
      in[f] = 1;
  }
  for (FactId f = 1; f <= n; ++f)
    if (in[f])
      r.push_back(f);
  return r;
}

struct Pipeline {
  KeyPath path;
  std::vector<DenialConstraint> dcs;
  WitnessIndex w;
  Conflicts c;
  Scope scope;
};

Pipeline prepare(const UnionQuery &q, const Instance &inst, std::span<const DenialConstraint> sigma,
                 const EngineOptions &opt) {
  Pipeline p;
  p.path = choose_key_path(sigma, opt.key_path);
  p.dcs = effective_constraints(inst.schema(), sigma, p.path);
  p.w = minimal_witnesses(q, inst, opt.parallel);
  p.c = compute_conflicts(inst, p.dcs, p.path);
  p.scope = opt.optimize ? apply_consistent_part_optimization(inst, p.c, p.w) : full_scope(inst, p.w);
  return p;
}

class Eliminator {
public:
  Eliminator(const Instance &inst, const Pipeline &p, const CnfFormula &phi, const EngineOptions &opt,
             AnswerReport &rep)
      : inst_(inst), p_(p), phi_(phi), opt_(opt), rep_(rep) {
    for (std::size_t l = 0; l < phi.vars.p.size(); ++l)
      if (phi.vars.p[l] != 0)
        active_.push_back(l);
  }

  void run() {
    if (opt_.strategy == Strategy::maxsat)
      run_maxsat();
    else
      run_iterative();
  }

private:
  void check_model(const Model &m) {
    if (opt_.check_models && !satisfies(phi_.clauses(), m))
      throw std::logic_error("solver model violates the initial formula in iteration " +
                             std::to_string(rep_.iterations));
  }

  void refute(std::size_t l, std::ptrdiff_t repair) {
    auto &a = rep_.answers[l];
    a.verdict = Verdict::inconsistent;
    a.decided_by = DecidedBy::solver;
    a.iteration = rep_.iterations;
    a.repair = repair;
  }

  std::ptrdiff_t record_repair(const Model &m) {
    if (!opt_.decode_repairs)
      return -1;
    rep_.repairs.push_back(decode_repair(inst_, p_.c, phi_.vars, m));
    return static_cast<std::ptrdiff_t>(rep_.repairs.size() - 1);
  }

  void settle_remaining(Verdict v) {
    for (std::size_t l : active_) {
      rep_.answers[l].verdict = v;
      rep_.answers[l].decided_by = v == Verdict::unknown ? DecidedBy::none : DecidedBy::solver;
    }
    active_.clear();
    if (v == Verdict::unknown)
      rep_.complete = false;
  }

  void run_maxsat() {
    const auto &vm = phi_.vars;
    std::vector<Clause> hard(phi_.clauses().begin(), phi_.clauses().end());
    std::vector<char> alive(hard.size(), 1);
    // Clauses holding the literal -p_l, per answer.
    std::vector<std::vector<std::size_t>> holding(vm.p.size());
    std::vector<std::ptrdiff_t> answer_of_var(static_cast<std::size_t>(vm.num_vars) + 1, -1);
    for (std::size_t l = 0; l < vm.p.size(); ++l)
      if (vm.p[l] != 0)
        answer_of_var[static_cast<std::size_t>(vm.p[l])] = static_cast<std::ptrdiff_t>(l);
    for (std::size_t i = 0; i < hard.size(); ++i)
      for (int lit : hard[i])
        if (lit < 0 && answer_of_var[static_cast<std::size_t>(-lit)] >= 0)
          holding[static_cast<std::size_t>(answer_of_var[static_cast<std::size_t>(-lit)])].push_back(i);
    std::vector<int> eliminated;

    while (!active_.empty()) {
      ++rep_.iterations;
      WcnfFormula psi;
      psi.num_vars = vm.num_vars;
      for (std::size_t i = 0; i < hard.size(); ++i)
        if (alive[i])
          psi.hard.push_back(hard[i]);
      for (int p : eliminated)
        psi.hard.push_back({-p});
      for (std::size_t l : active_)
        psi.soft.push_back({{vm.p[l]}, 1});

      MaxSatResult res = opt_.solver == "internal" ? maxsat_solve(psi, opt_.solver_config, opt_.parallel)
                                                   : external_solve(opt_.solver, psi);
      rep_.solver_calls += res.sat_calls;
      if (res.status == MaxSatStatus::hard_unsat)
        throw SolverError("hard clauses are unsatisfiable; the encoding admits no repair");
      if (res.model.empty()) {
        settle_remaining(Verdict::unknown);
        return;
      }
      check_model(res.model);
      std::vector<std::size_t> keep;
      std::vector<std::size_t> refuted;
      for (std::size_t l : active_)
        (model_value(res.model, vm.p[l]) ? refuted : keep).push_back(l);
      if (refuted.empty()) {
        settle_remaining(res.status == MaxSatStatus::optimum ? Verdict::consistent : Verdict::unknown);
        return;
      }
      auto repair = record_repair(res.model);
      for (std::size_t l : refuted) {
        refute(l, repair);
        for (std::size_t i : holding[l])
          alive[i] = 0;
        eliminated.push_back(vm.p[l]);
      }
      active_ = std::move(keep);
    }
  }

  void run_iterative() {
    if (opt_.solver != "internal")
      throw ValidationError("the iterative SAT strategy runs on the internal solver only");
    const auto &vm = phi_.vars;
    sat::Solver s(opt_.solver_config.seed);
    s.ensure_vars(vm.num_vars);
    s.set_conflict_budget(opt_.solver_config.conflict_budget);
    for (const auto &c : phi_.clauses())
      if (!s.add_clause(c))
        throw SolverError("hard clauses are unsatisfiable; the encoding admits no repair");
    while (!active_.empty()) {
      ++rep_.iterations;
      int act = s.new_var();
      Clause some{-act};
      for (std::size_t l : active_)
        some.push_back(vm.p[l]);
      s.add_clause(some);
      std::vector<int> assume{act};
      ++rep_.solver_calls;
      auto st = s.solve(assume);
      if (st == sat::Status::unsat) {
        settle_remaining(Verdict::consistent);
        return;
      }
      if (st == sat::Status::unknown) {
        settle_remaining(Verdict::unknown);
        return;
      }
      Model m = s.model();
      check_model(m);
      auto repair = record_repair(m);
      std::vector<std::size_t> keep;
      for (std::size_t l : active_) {
        if (model_value(m, vm.p[l]))
          refute(l, repair);
        else
          keep.push_back(l);
      }
      active_ = std::move(keep);
      s.add_clause({-act});
    }
  }

  const Instance &inst_;
  const Pipeline &p_;
  const CnfFormula &phi_;
  const EngineOptions &opt_;
  AnswerReport &rep_;
  std::vector<std::size_t> active_;
};

} // namespace

AnswerReport consistent_answers(const UnionQuery &q, const Instance &inst, std::span<const DenialConstraint> sigma,
                                const EngineOptions &opt) {
  auto start = Clock::now();
  AnswerReport rep;
  rep.boolean = q.is_boolean();
  rep.strategy = opt.strategy;
  rep.optimize = opt.optimize;
  rep.facts = inst.size();

  Pipeline p = prepare(q, inst, sigma, opt);
  rep.key_path = p.path;
  rep.consistent_facts = p.c.num_consistent();
  rep.violations = p.path == KeyPath::denial ? p.c.violations.violations.size() : 0;
  if (p.path == KeyPath::native)
    for (const auto &g : p.c.groups)
      rep.violations += g.size() * (g.size() - 1) / 2;
  for (std::size_t l = 0; l < p.w.size(); ++l) {
    rep.witnesses += p.w.witnesses[l].size();
    AnswerVerdict a;
    for (ValueId id : p.w.answers[l])
      a.values.push_back(inst.value(id));
    if (p.scope.consistent_witness[l] >= 0) {
      a.verdict = Verdict::consistent;
      a.decided_by = DecidedBy::consistent_part;
      a.witness = p.w.witnesses[l][static_cast<std::size_t>(p.scope.consistent_witness[l])];
    }
    rep.answers.push_back(std::move(a));
  }
  CnfFormula phi = build_formula(inst, p.c, p.w, p.scope, true);
  rep.variables = static_cast<std::size_t>(phi.num_vars());
  rep.hard_clauses = phi.size();
  rep.soft_clauses = phi.vars.num_p();
  rep.encode_seconds = seconds_since(start);

  auto solve_start = Clock::now();
  Eliminator(inst, p, phi, opt, rep).run();
  rep.solve_seconds = seconds_since(solve_start);
  return rep;
}

bool certain_boolean(const UnionQuery &q, const Instance &inst, std::span<const DenialConstraint> sigma,
                     const EngineOptions &opt) {
  if (!q.is_boolean())
    throw ValidationError("certain_boolean needs a boolean query");
  Pipeline p = prepare(q, inst, sigma, opt);
  if (p.w.size() == 0)
    return false;
  if (p.scope.consistent_witness[0] >= 0)
    return true;
  const bool with_p = p.path == KeyPath::denial;
  CnfFormula phi = build_formula(inst, p.c, p.w, p.scope, with_p);
  std::vector<int> assume;
  if (with_p)
    assume.push_back(phi.vars.p[0]);
  auto r = sat_solve(phi.clauses(), phi.num_vars(), opt.solver_config, assume);
  if (r.status == sat::Status::unknown)
    throw SolverError("SAT solver gave up (conflict budget exhausted)");
  return r.status == sat::Status::unsat;
}

Explanation explain(const AnswerReport &report, std::span<const Value> answer) {
  std::size_t i = report.find(answer);
  if (i == report.answers.size())
    throw ValidationError("not a potential answer");
  const auto &a = report.answers[i];
  Explanation e;
  e.verdict = a.verdict;
  e.decided_by = a.decided_by;
  if (a.decided_by == DecidedBy::consistent_part) {
    e.kind = "witness";
    e.facts = a.witness;
  } else if (a.verdict == Verdict::inconsistent && a.repair >= 0) {
    e.kind = "repair";
    e.facts = report.repairs[static_cast<std::size_t>(a.repair)];
  }
  return e;
}

namespace {

nlohmann::json value_json(const Value &v) {
  switch (kind_of(v)) {
  case ValueKind::text:
    return std::get<std::string>(v);
  case ValueKind::integer:
    return std::get<std::int64_t>(v);
  case ValueKind::decimal:
    return std::get<double>(v);
  }
  return nullptr;
}

nlohmann::json tuple_json(const std::vector<Value> &t) {
  auto arr = nlohmann::json::array();
  for (const auto &v : t)
    arr.push_back(value_json(v));
  return arr;
}

std::string tuple_text(const std::vector<Value> &t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i)
      s += ", ";
    s += format_value(t[i]);
  }
  return s + ")";
}

} // namespace

std::string report_json(const AnswerReport &r, const Instance &inst, bool with_repairs) {
  nlohmann::json j;
  j["boolean"] = r.boolean;
  j["complete"] = r.complete;
  j["strategy"] = std::string(to_string(r.strategy));
  j["optimize"] = r.optimize;
  j["key_path"] = std::string(to_string(r.key_path));
  j["iterations"] = r.iterations;
  j["solver_calls"] = r.solver_calls;
  j["variables"] = r.variables;
  j["clauses"] = r.clauses();
  j["hard_clauses"] = r.hard_clauses;
  j["soft_clauses"] = r.soft_clauses;
  j["facts"] = r.facts;
  j["consistent_facts"] = r.consistent_facts;
  j["witnesses"] = r.witnesses;
  j["violations"] = r.violations;
  j["encode_seconds"] = r.encode_seconds;
  j["solve_seconds"] = r.solve_seconds;
  auto answers = nlohmann::json::array();
  auto consistent = nlohmann::json::array();
  for (const auto &a : r.answers) {
    nlohmann::json e;
    e["values"] = tuple_json(a.values);
    e["verdict"] = std::string(to_string(a.verdict));
    e["decided_by"] = std::string(to_string(a.decided_by));
    if (a.iteration)
      e["iteration"] = a.iteration;
    if (!a.witness.empty()) {
      auto facts = nlohmann::json::array();
      for (FactId f : a.witness)
        facts.push_back(inst.describe(f));
      e["witness"] = facts;
    }
    if (a.repair >= 0)
      e["repair"] = a.repair;
    answers.push_back(std::move(e));
    if (a.verdict == Verdict::consistent)
      consistent.push_back(tuple_json(a.values));
  }
  j["answers"] = std::move(answers);
  j["consistent"] = std::move(consistent);
  if (with_repairs) {
    auto reps = nlohmann::json::array();
    for (const auto &rep : r.repairs)
      reps.push_back(rep);
    j["repairs"] = std::move(reps);
  }
  return j.dump(2);
}

std::string report_table(const AnswerReport &r) {
  std::vector<std::array<std::string, 4>> rows;
  rows.push_back({"answer", "verdict", "decided_by", "iteration"});
  for (const auto &a : r.answers)
    rows.push_back({tuple_text(a.values), std::string(to_string(a.verdict)), std::string(to_string(a.decided_by)),
                    a.iteration ? std::to_string(a.iteration) : "-"});
  std::array<std::size_t, 4> width{};
  for (const auto &row : rows)
    for (std::size_t k = 0; k < 4; ++k)
      width[k] = std::max(width[k], row[k].size());
  std::ostringstream out;
  for (const auto &row : rows) {
    for (std::size_t k = 0; k < 4; ++k) {
      out << row[k];
      if (k + 1 < 4)
        out << std::string(width[k] - row[k].size() + 2, ' ');
    }
    out << '\n';
  }
  out << "\nconsistent " << r.count(Verdict::consistent) << " / " << r.answers.size() << ", inconsistent "
      << r.count(Verdict::inconsistent) << ", unknown " << r.count(Verdict::unknown) << (r.complete ? "" : " (incomplete)")
      << "\n";
  out << "strategy " << to_string(r.strategy) << ", optimize " << (r.optimize ? "on" : "off") << ", key path "
      << to_string(r.key_path) << ", iterations " << r.iterations << "\n";
  out << "variables " << r.variables << ", clauses " << r.clauses() << " (" << r.hard_clauses << " hard, "
      << r.soft_clauses << " soft)\n";
  out << "encode " << r.encode_seconds << " s, solve " << r.solve_seconds << " s\n";
  return out.str();
}

} // namespace cqa
