#include "cqa/encoder.hpp"

#include "cqa/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace cqa {

std::string_view to_string(ClauseRole role) {
  switch (role) {
  case ClauseRole::alpha:
    return "alpha";
  case ClauseRole::beta:
    return "beta";
  case ClauseRole::gamma:
    return "gamma";
  case ClauseRole::theta:
    return "theta";
  case ClauseRole::truth:
    return "truth";
  }
  return "?";
}

std::string_view to_string(KeyPath path) { return path == KeyPath::native ? "native" : "denial"; }

std::size_t VariableMap::num_x() const {
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](int v) { return v != 0; }));
}

std::size_t VariableMap::num_p() const {
  return static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](int v) { return v != 0; }));
}

std::string VariableMap::name(int var) const {
  if (var == x_true && var != 0)
    return "x_true";
  for (std::size_t f = 1; f < x.size(); ++f)
    if (x[f] == var)
      return "x" + std::to_string(f);
  for (std::size_t l = 0; l < p.size(); ++l)
    if (p[l] == var)
      return "p" + std::to_string(l + 1);
  if (var >= y_base && y_base > 0 && static_cast<std::size_t>(var - y_base) < y.size()) {
    const auto &yv = y[static_cast<std::size_t>(var - y_base)];
    return "y" + std::to_string(yv.fact) + "." + std::to_string(yv.near_index);
  }
  return "v" + std::to_string(var);
}

bool normalize_clause(Clause &c) {
  std::sort(c.begin(), c.end(), [](int a, int b) {
    int va = std::abs(a), vb = std::abs(b);
    return va != vb ? va < vb : a < b;
  });
  c.erase(std::unique(c.begin(), c.end()), c.end());
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] == -c[i - 1])
      return false;
  return true;
}

std::size_t CnfFormula::ClauseHash::operator()(const Clause &c) const {
  std::size_t h = 1469598103934665603ULL;
  for (int l : c)
    h = (h ^ static_cast<std::uint32_t>(l)) * 1099511628211ULL;
  return h;
}

bool CnfFormula::add(ClauseRole role, Clause clause) {
  if (clause.empty())
    throw std::logic_error("empty clause added to formula");
  if (!normalize_clause(clause))
    return false;
  if (!seen_.insert(clause).second)
    return false;
  clauses_.push_back(std::move(clause));
  roles_.push_back(role);
  return true;
}

std::size_t CnfFormula::count(ClauseRole role) const {
  return static_cast<std::size_t>(std::count(roles_.begin(), roles_.end(), role));
}

std::vector<Clause> CnfFormula::clauses_of(ClauseRole role) const {
  std::vector<Clause> out;
  for (std::size_t i = 0; i < clauses_.size(); ++i)
    if (roles_[i] == role)
      out.push_back(clauses_[i]);
  return out;
}

std::size_t CnfFormula::literal_count() const {
  std::size_t n = 0;
  for (const auto &c : clauses_)
    n += c.size();
  return n;
}

std::uint64_t WcnfFormula::top() const {
  std::uint64_t sum = 1;
  for (const auto &s : soft)
    sum += s.weight;
  return sum;
}

WcnfFormula to_wcnf(const CnfFormula &phi) {
  WcnfFormula psi;
  psi.num_vars = phi.num_vars();
  psi.hard.assign(phi.clauses().begin(), phi.clauses().end());
  for (int p : phi.vars.p)
    if (p != 0)
      psi.soft.push_back({{p}, 1});
  return psi;
}

namespace {

void append_clause(std::string &out, const Clause &c) {
  for (int l : c) {
    out += std::to_string(l);
    out += ' ';
  }
  out += "0\n";
}

} // namespace

std::string export_dimacs(std::span<const Clause> clauses, int num_vars) {
  std::string out = "p cnf " + std::to_string(num_vars) + " " + std::to_string(clauses.size()) + "\n";
  for (const auto &c : clauses)
    append_clause(out, c);
  return out;
}

std::string export_dimacs(const CnfFormula &phi) { return export_dimacs(phi.clauses(), phi.num_vars()); }

std::string export_dimacs(const WcnfFormula &psi) {
  const std::uint64_t top = psi.top();
  const std::string top_text = std::to_string(top);
  std::string out = "p wcnf " + std::to_string(psi.num_vars) + " " +
                    std::to_string(psi.hard.size() + psi.soft.size()) + " " + top_text + "\n";
  for (const auto &c : psi.hard) {
    out += top_text;
    out += ' ';
    append_clause(out, c);
  }
  for (const auto &s : psi.soft) {
    out += std::to_string(s.weight);
    out += ' ';
    append_clause(out, s.lits);
  }
  return out;
}

DimacsFile parse_dimacs(std::string_view text) {
  DimacsFile file;
  bool have_header = false;
  std::uint64_t top = 0;
  std::size_t line_no = 0;
  int max_var = 0;
  int declared_vars = 0;

  auto fail = [&](const std::string &msg) { throw ParseError(line_no, "DIMACS line " + std::to_string(line_no) + ": " + msg); };
  auto read_int = [&](std::string_view &rest, auto &value) {
    std::size_t k = rest.find_first_not_of(" \t\r");
    if (k == std::string_view::npos)
      return false;
    rest.remove_prefix(k);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
    if (ec != std::errc())
      fail("expected a number");
    rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
    return true;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    std::size_t k = line.find_first_not_of(" \t\r");
    if (k == std::string_view::npos)
      continue;
    line.remove_prefix(k);
    if (line[0] == 'c' || line[0] == '%')
      continue;
    if (line[0] == 'p') {
      std::istringstream in{std::string(line)};
      std::string p, kind;
      long long vars = 0, clauses = 0;
      in >> p >> kind >> vars >> clauses;
      if (kind == "cnf") {
        file.weighted = false;
      } else if (kind == "wcnf") {
        file.weighted = true;
        if (!(in >> top))
          top = 0;
      } else {
        fail("unknown problem line");
      }
      if (!in && kind == "cnf")
        fail("malformed problem line");
      declared_vars = static_cast<int>(vars);
      have_header = true;
      continue;
    }
    std::string_view rest = line;
    bool hard = !file.weighted;
    std::uint64_t weight = 1;
    if (!have_header) {
      // Header-less weighted format: "h lits 0" or "w lits 0".
      file.weighted = true;
      if (rest[0] == 'h') {
        hard = true;
        rest.remove_prefix(1);
      } else {
        hard = false;
        read_int(rest, weight);
      }
    } else if (file.weighted) {
      if (!read_int(rest, weight))
        fail("missing weight");
      hard = top != 0 && weight >= top;
    }
    Clause c;
    int lit = 0;
    bool terminated = false;
    while (read_int(rest, lit)) {
      if (lit == 0) {
        terminated = true;
        break;
      }
      max_var = std::max(max_var, std::abs(lit));
      c.push_back(lit);
    }
    if (!terminated)
      fail("clause not terminated by 0");
    if (hard)
      file.formula.hard.push_back(std::move(c));
    else
      file.formula.soft.push_back({std::move(c), weight});
  }
  file.formula.num_vars = std::max(declared_vars, max_var);
  return file;
}

// ---------------------------------------------------------------------------

std::size_t Conflicts::num_consistent() const {
  return consistent.empty() ? 0 : static_cast<std::size_t>(std::count(consistent.begin() + 1, consistent.end(), 1));
}

Conflicts compute_conflicts(const Instance &inst, std::span<const DenialConstraint> sigma, KeyPath path) {
  Conflicts c;
  c.path = path;
  const std::size_t n = inst.size();
  if (path == KeyPath::native) {
    c.groups = inst.all_key_equal_groups();
    c.consistent.assign(n + 1, 1);
    c.consistent[0] = 0;
    c.component.assign(n + 1, 0);
    std::uint32_t next = 0;
    for (const auto &g : c.groups) {
      if (g.size() < 2)
        continue;
      ++next;
      for (FactId f : g) {
        c.consistent[f] = 0;
        c.component[f] = next;
      }
    }
  } else {
    c.violations = violation_index(sigma, inst);
    c.consistent = consistent_flags(c.violations.violations, n);
    c.component = conflict_components(c.violations.violations, n);
  }
  return c;
}

Scope full_scope(const Instance &inst, const WitnessIndex &w) {
  Scope s;
  s.fact_in.assign(inst.size() + 1, 1);
  s.fact_in[0] = 0;
  s.answer_in.assign(w.size(), 1);
  s.consistent_witness.assign(w.size(), -1);
  return s;
}

Scope apply_consistent_part_optimization(const Instance &inst, const Conflicts &c, const WitnessIndex &w) {
  Scope s;
  s.drop_consistent = true;
  s.fact_in.assign(inst.size() + 1, 0);
  s.answer_in.assign(w.size(), 0);
  s.consistent_witness.assign(w.size(), -1);
  std::vector<char> comp_in;
  for (std::size_t l = 0; l < w.size(); ++l) {
    const auto &ws = w.witnesses[l];
    for (std::size_t j = 0; j < ws.size(); ++j) {
      bool all = std::all_of(ws[j].begin(), ws[j].end(), [&](FactId f) { return c.consistent[f] != 0; });
      if (all) {
        s.consistent_witness[l] = static_cast<std::ptrdiff_t>(j);
        break;
      }
    }
    if (s.consistent_witness[l] >= 0)
      continue;
    s.answer_in[l] = 1;
    for (const auto &wit : ws)
      for (FactId f : wit) {
        if (c.consistent[f])
          continue;
        std::uint32_t k = c.component[f];
        if (k >= comp_in.size())
          comp_in.resize(k + 1, 0);
        comp_in[k] = 1;
      }
  }
  for (FactId f = 1; f <= inst.size(); ++f) {
    std::uint32_t k = c.component[f];
    if (k != 0 && k < comp_in.size() && comp_in[k])
      s.fact_in[f] = 1;
  }
  return s;
}

CnfFormula build_formula(const Instance &inst, const Conflicts &c, const WitnessIndex &w, const Scope &scope,
                         bool with_p) {
  CnfFormula phi;
  VariableMap &vm = phi.vars;
  const std::size_t n = inst.size();
  int next = 0;
  vm.x.assign(n + 1, 0);
  for (FactId f = 1; f <= n; ++f)
    if (scope.fact_in[f])
      vm.x[f] = ++next;
  vm.p.assign(w.size(), 0);
  if (with_p)
    for (std::size_t l = 0; l < w.size(); ++l)
      if (scope.answer_in[l])
        vm.p[l] = ++next;

  const bool denial = c.path == KeyPath::denial;
  const auto &near = c.violations.near;
  // y variables for near-violations of size > 1; x_true for the sentinel.
  std::vector<std::vector<int>> near_lit; // by fact id, per near-violation
  bool need_true = false;
  if (denial) {
    near_lit.resize(n + 1);
    vm.y_base = next + 1;
    for (FactId f = 1; f <= n; ++f) {
      if (!scope.fact_in[f])
        continue;
      near_lit[f].resize(near[f].size(), 0);
      for (std::size_t j = 0; j < near[f].size(); ++j) {
        const FactSet &nv = near[f][j];
        if (nv.size() == 1 && nv[0] == true_fact) {
          need_true = true;
        } else if (nv.size() == 1) {
          near_lit[f][j] = vm.x[nv[0]];
        } else {
          near_lit[f][j] = ++next;
          vm.y.push_back({f, j});
        }
      }
    }
    if (vm.y.empty())
      vm.y_base = 0;
    if (need_true)
      vm.x_true = ++next;
  }
  vm.num_vars = next;

  // alpha
  if (!denial) {
    for (const auto &g : c.groups) {
      if (!scope.fact_in[g.front()])
        continue;
      Clause cl;
      for (FactId f : g)
        cl.push_back(vm.x[f]);
      phi.add(ClauseRole::alpha, std::move(cl));
    }
  } else {
    for (const auto &v : c.violations.violations) {
      if (!scope.fact_in[v.front()])
        continue;
      Clause cl;
      for (FactId f : v)
        cl.push_back(-vm.x[f]);
      phi.add(ClauseRole::alpha, std::move(cl));
    }
  }

  // beta
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (!scope.answer_in[l])
      continue;
    for (const auto &wit : w.witnesses[l]) {
      Clause cl;
      for (FactId f : wit) {
        if (scope.drop_consistent && c.consistent[f])
          continue;
        cl.push_back(-vm.x[f]);
      }
      if (with_p)
        cl.push_back(-vm.p[l]);
      phi.add(ClauseRole::beta, std::move(cl));
    }
  }

  if (denial) {
    // gamma
    for (FactId f = 1; f <= n; ++f) {
      if (!scope.fact_in[f])
        continue;
      Clause cl{vm.x[f]};
      for (std::size_t j = 0; j < near[f].size(); ++j)
        cl.push_back(near_lit[f][j] != 0 ? near_lit[f][j] : vm.x_true);
      phi.add(ClauseRole::gamma, std::move(cl));
    }
    // theta
    for (std::size_t k = 0; k < vm.y.size(); ++k) {
      const int y = vm.y_base + static_cast<int>(k);
      const FactSet &nv = near[vm.y[k].fact][vm.y[k].near_index];
      Clause back{y};
      for (FactId g : nv) {
        phi.add(ClauseRole::theta, {-y, vm.x[g]});
        back.push_back(-vm.x[g]);
      }
      phi.add(ClauseRole::theta, std::move(back));
    }
    if (vm.x_true != 0)
      phi.add(ClauseRole::truth, {vm.x_true});
  }
  return phi;
}

CnfFormula encode_keys_boolean(const Instance &inst, const UnionQuery &q) {
  if (!q.is_boolean())
    throw ValidationError("encode_keys_boolean needs a boolean query");
  auto c = compute_conflicts(inst, {}, KeyPath::native);
  auto w = minimal_witnesses(q, inst);
  return build_formula(inst, c, w, full_scope(inst, w), false);
}

CnfFormula encode_keys_nonboolean(const Instance &inst, const UnionQuery &q) {
  auto c = compute_conflicts(inst, {}, KeyPath::native);
  auto w = minimal_witnesses(q, inst);
  return build_formula(inst, c, w, full_scope(inst, w), true);
}

CnfFormula encode_denial(const Instance &inst, std::span<const DenialConstraint> sigma, const UnionQuery &q) {
  auto c = compute_conflicts(inst, sigma, KeyPath::denial);
  auto w = minimal_witnesses(q, inst);
  return build_formula(inst, c, w, full_scope(inst, w), true);
}

} // namespace cqa
