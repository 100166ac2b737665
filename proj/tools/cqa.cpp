#include "cqa/bench.hpp"
#include "cqa/datagen.hpp"
#include "cqa/encoder.hpp"
#include "cqa/engine.hpp"
#include "cqa/error.hpp"
#include "cqa/oracle.hpp"
#include "cqa/relational.hpp"
#include "cqa/solver.hpp"
#include "cqa/witnesses.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <regex>

namespace {

using namespace cqa;

struct Inputs {
  std::string data;
  std::string schema;
  std::string constraints;
  std::string query;
};

void add_inputs(CLI::App *cmd, Inputs &in, bool need_query) {
  cmd->add_option("--data", in.data, "directory with one <Relation>.csv per relation")->required();
  cmd->add_option("--schema", in.schema, "schema file")->required();
  cmd->add_option("--constraints", in.constraints, "denial constraints file (beyond the schema keys)");
  auto *q = cmd->add_option("--query", in.query, "query file");
  if (need_query)
    q->required();
}

struct Loaded {
  Instance instance;
  std::vector<DenialConstraint> constraints;
  UnionQuery query;
};

Loaded load(const Inputs &in) {
  Schema schema = parse_schema(read_file(in.schema));
  Loaded l{ingest(schema, in.data), {}, {}};
  if (!in.constraints.empty())
    l.constraints = parse_constraints(read_file(in.constraints), schema);
  if (!in.query.empty())
    l.query = parse_query(read_file(in.query), schema);
  return l;
}

KeyPathChoice key_path_of(const std::string &s) {
  if (s == "native")
    return KeyPathChoice::native;
  if (s == "denial")
    return KeyPathChoice::denial;
  return KeyPathChoice::automatic;
}

void write_text(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  out << text;
  if (!out)
    throw Error("cannot write " + path);
}

nlohmann::json fact_sets(const std::vector<FactSet> &sets) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto &s : sets)
    a.push_back(s);
  return a;
}

std::string index_json(const Instance &inst, const WitnessIndex &w, const Conflicts &c) {
  nlohmann::json j;
  j["answers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < w.size(); ++l) {
    nlohmann::json vals = nlohmann::json::array();
    for (ValueId v : w.answers[l])
      vals.push_back(format_value(inst.value(v)));
    j["answers"].push_back({{"values", vals}, {"witnesses", fact_sets(w.witnesses[l])}});
  }
  if (c.path == KeyPath::native) {
    j["key_equal_groups"] = fact_sets(c.groups);
  } else {
    j["violations"] = fact_sets(c.violations.violations);
    nlohmann::json near = nlohmann::json::object();
    for (FactId f = 1; f < c.violations.near.size(); ++f)
      if (!c.violations.near[f].empty())
        near[std::to_string(f)] = fact_sets(c.violations.near[f]);
    j["near_violations"] = near;
  }
  nlohmann::json cons = nlohmann::json::array();
  for (FactId f = 1; f <= inst.size(); ++f)
    if (c.consistent[f])
      cons.push_back(f);
  j["consistent_part"] = cons;
  return j.dump(2) + "\n";
}

std::vector<std::string> expand_queries(const std::string &spec) {
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::regex range(R"(([qQ])(\d+)-[qQ]?(\d+))");
  for (std::string item; std::getline(ss, item, ',');) {
    std::smatch m;
    if (std::regex_match(item, m, range)) {
      for (int i = std::stoi(m[2]); i <= std::stoi(m[3]); ++i)
        out.push_back(m[1].str() + std::to_string(i));
    } else if (item == "all") {
      for (const auto &n : catalog_names())
        out.push_back(n);
    } else if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

// Engine verdicts for every configuration against the repair oracle.
std::optional<std::string> differential_case(const Problem &pb) {
  auto expected = consistent_answers_bruteforce(pb.query, pb.instance, pb.constraints);
  std::sort(expected.begin(), expected.end());
  for (Strategy st : {Strategy::maxsat, Strategy::iterative_sat})
    for (bool optimize : {true, false})
      for (KeyPathChoice kp : {KeyPathChoice::native, KeyPathChoice::denial}) {
        if (kp == KeyPathChoice::native && !pb.constraints.empty())
          continue;
        EngineOptions o;
        o.strategy = st;
        o.optimize = optimize;
        o.key_path = kp;
        AnswerReport rep = consistent_answers(pb.query, pb.instance, pb.constraints, o);
        std::vector<std::vector<ValueId>> got;
        for (const auto &a : rep.answers) {
          if (a.verdict == Verdict::unknown)
            return "unknown verdict";
          if (a.verdict != Verdict::consistent)
            continue;
          std::vector<ValueId> ids;
          for (const auto &v : a.values)
            ids.push_back(*pb.instance.values().find(v));
          got.push_back(ids);
        }
        std::sort(got.begin(), got.end());
        if (got != expected)
          return std::string(to_string(st)) + (optimize ? " optimized" : " unoptimized") +
                 (kp == KeyPathChoice::native ? " native" : " denial") + " disagrees with the oracle";
      }
  return std::nullopt;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Consistent query answering over inconsistent databases via SAT"};
  app.require_subcommand(1);

  // answer
  Inputs ans_in;
  std::string strategy = "maxsat", solver = "internal", report = "table", key_path = "auto";
  bool no_optimize = false, with_repairs = false, serial = false;
  std::uint64_t seed = 1;
  std::int64_t budget = -1;
  auto *answer = app.add_subcommand("answer", "consistent answers of a query");
  add_inputs(answer, ans_in, true);
  answer->add_option("--strategy", strategy, "maxsat or iter-sat")->check(CLI::IsMember({"maxsat", "iter-sat"}));
  answer->add_flag("--no-optimize", no_optimize, "encode every fact and answer");
  answer->add_option("--solver", solver, "internal, or a MaxSAT solver command taking a WCNF file");
  answer->add_option("--seed", seed, "solver seed");
  answer->add_option("--conflict-budget", budget, "conflicts per SAT call before giving up (-1: none)");
  answer->add_option("--key-path", key_path, "auto, native or denial")
      ->check(CLI::IsMember({"auto", "native", "denial"}));
  answer->add_option("--report", report, "json or table")->check(CLI::IsMember({"json", "table"}));
  answer->add_flag("--with-repairs", with_repairs, "include falsifying repairs in the JSON report");
  answer->add_flag("--serial", serial, "disable OpenMP kernels");

  // encode
  Inputs enc_in;
  std::string enc_out = "-", emit_witnesses, enc_format = "wcnf", enc_key_path = "auto";
  bool enc_no_optimize = false;
  auto *encode = app.add_subcommand("encode", "write the CNF or WCNF encoding");
  add_inputs(encode, enc_in, true);
  encode->add_option("--format", enc_format, "cnf or wcnf")->check(CLI::IsMember({"cnf", "wcnf"}));
  encode->add_option("--out", enc_out, "output file (- for stdout)");
  encode->add_option("--emit-witnesses", emit_witnesses, "JSON dump of answers, witnesses and violations");
  encode->add_flag("--no-optimize", enc_no_optimize, "encode every fact and answer");
  encode->add_option("--key-path", enc_key_path, "auto, native or denial")
      ->check(CLI::IsMember({"auto", "native", "denial"}));

  // solve
  std::string solve_file;
  std::uint64_t solve_seed = 1;
  bool solve_serial = false;
  auto *solve = app.add_subcommand("solve", "solve a DIMACS CNF or WCNF file, printing s/o/v lines");
  solve->add_option("file", solve_file)->required();
  solve->add_option("--seed", solve_seed);
  solve->add_flag("--serial", solve_serial, "linear search on the whole formula");

  // oracle-check
  std::uint64_t oc_seed = 1;
  std::size_t oc_cases = 200, oc_facts = 12;
  auto *oracle = app.add_subcommand("oracle-check", "compare the engine with brute-force repair enumeration");
  oracle->add_option("--seed", oc_seed);
  oracle->add_option("--cases", oc_cases);
  oracle->add_option("--max-facts", oc_facts);

  // gen
  std::string gen_query = "q1", gen_out;
  GenConfig gen_cfg;
  auto *gen = app.add_subcommand("gen", "generate synthetic inconsistent data for a catalog query");
  gen->add_option("--query", gen_query, "catalog name (q1..q21, Q1..Q6)");
  gen->add_option("--rsize", gen_cfg.rsize, "tuples per relation");
  gen->add_option("--indeg", gen_cfg.indeg, "percent of tuples in key violations");
  gen->add_option("--kmin", gen_cfg.min_ksize, "smallest key-equal group");
  gen->add_option("--kmax", gen_cfg.max_ksize, "largest key-equal group");
  gen->add_option("--selectivity", gen_cfg.selectivity, "planted matches as a fraction of rsize");
  gen->add_option("--seed", gen_cfg.seed);
  gen->add_option("--out", gen_out, "output directory")->required();

  // bench
  std::string b_queries = "q1-q7", b_strategy = "maxsat", b_optimize = "on", b_out = "-", b_format = "csv";
  std::vector<std::size_t> b_rsize{10000};
  std::vector<double> b_indeg{10};
  std::size_t b_reps = 1;
  std::uint64_t b_seed = 1;
  std::string b_solver = "internal";
  auto *bench = app.add_subcommand("bench", "time encoding and solving over generated data");
  bench->add_option("--queries", b_queries, "comma list; ranges like q1-q7; all");
  bench->add_option("--rsize", b_rsize, "tuples per relation")->delimiter(',');
  bench->add_option("--indeg", b_indeg, "inconsistency percentages")->delimiter(',');
  bench->add_option("--reps", b_reps, "repetitions per cell (median reported)");
  bench->add_option("--strategy", b_strategy, "maxsat, iter-sat or both")
      ->check(CLI::IsMember({"maxsat", "iter-sat", "both"}));
  bench->add_option("--optimize", b_optimize, "on, off or both")->check(CLI::IsMember({"on", "off", "both"}));
  bench->add_option("--format", b_format, "csv, json or table")->check(CLI::IsMember({"csv", "json", "table"}));
  bench->add_option("--solver", b_solver);
  bench->add_option("--seed", b_seed, "data seed");
  bench->add_option("--out", b_out, "output file (- for stdout)");

  // ingest
  Inputs ing_in;
  auto *ingest_cmd = app.add_subcommand("ingest", "load data and summarize relations and key violations");
  add_inputs(ingest_cmd, ing_in, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*answer) {
      Loaded l = load(ans_in);
      EngineOptions o;
      o.strategy = *parse_strategy(strategy);
      o.optimize = !no_optimize;
      o.solver = solver;
      o.solver_config.seed = seed;
      o.solver_config.conflict_budget = budget;
      o.key_path = key_path_of(key_path);
      o.parallel = !serial;
      AnswerReport rep = consistent_answers(l.query, l.instance, l.constraints, o);
      std::cout << (report == "json" ? report_json(rep, l.instance, with_repairs) + "\n" : report_table(rep));
      return rep.complete ? 0 : 3;
    }
    if (*encode) {
      Loaded l = load(enc_in);
      KeyPath path = choose_key_path(l.constraints, key_path_of(enc_key_path));
      auto dcs = effective_constraints(l.instance.schema(), l.constraints, path);
      WitnessIndex w = minimal_witnesses(l.query, l.instance);
      Conflicts c = compute_conflicts(l.instance, dcs, path);
      Scope scope = enc_no_optimize ? full_scope(l.instance, w) : apply_consistent_part_optimization(l.instance, c, w);
      bool boolean_keys = l.query.is_boolean() && path == KeyPath::native && enc_format == "cnf";
      CnfFormula phi = build_formula(l.instance, c, w, scope, !boolean_keys);
      write_text(enc_out, enc_format == "cnf" ? export_dimacs(phi) : export_dimacs(to_wcnf(phi)));
      if (!emit_witnesses.empty())
        write_text(emit_witnesses, index_json(l.instance, w, c));
      return 0;
    }
    if (*solve) {
      DimacsFile d = parse_dimacs(read_file(solve_file));
      SolverConfig cfg;
      cfg.seed = solve_seed;
      MaxSatResult r = solve_serial ? maxsat_solve_serial(d.formula, cfg) : maxsat_solve(d.formula, cfg);
      std::cout << format_solution(r, d.formula.num_vars, d.weighted);
      if (r.status == MaxSatStatus::hard_unsat)
        return 20;
      return r.status == MaxSatStatus::optimum ? (d.weighted ? 30 : 10) : 0;
    }
    if (*oracle) {
      std::mt19937_64 rng(oc_seed);
      RandomProblemOptions opt;
      opt.max_facts = oc_facts;
      for (std::size_t k = 0; k < oc_cases; ++k) {
        opt.constraints = k % 2 == 1;
        Problem pb = random_problem(rng, opt);
        if (auto msg = differential_case(pb)) {
          std::cout << "counterexample after " << k << " cases: " << *msg << "\n" << pb.describe();
          return 1;
        }
      }
      std::cout << oc_cases << " cases agree with the oracle\n";
      return 0;
    }
    if (*gen) {
      CatalogEntry e = query_catalog(gen_query);
      Generated g = generate(e, gen_cfg);
      write_generated(gen_out, e, g);
      std::cout << gen_report_json(g.report) << "\n";
      return 0;
    }
    if (*bench) {
      BenchPlan plan;
      plan.queries = expand_queries(b_queries);
      plan.rsizes = b_rsize;
      plan.indegs = b_indeg;
      plan.repetitions = b_reps;
      plan.seed = b_seed;
      plan.engine.solver = b_solver;
      plan.strategies.clear();
      if (b_strategy != "iter-sat")
        plan.strategies.push_back(Strategy::maxsat);
      if (b_strategy != "maxsat")
        plan.strategies.push_back(Strategy::iterative_sat);
      plan.optimize.clear();
      if (b_optimize != "off")
        plan.optimize.push_back(true);
      if (b_optimize != "on")
        plan.optimize.push_back(false);
      auto records = run_bench(plan);
      write_text(b_out, bench_report(records, *parse_report_format(b_format)));
      return 0;
    }
    if (*ingest_cmd) {
      Loaded l = load(ing_in);
      const Schema &s = l.instance.schema();
      for (RelationId r = 0; r < s.size(); ++r) {
        std::size_t groups = 0, in = 0;
        for (const auto &g : l.instance.key_equal_groups(r))
          if (g.size() > 1) {
            ++groups;
            in += g.size();
          }
        std::cout << s.at(r).name << ": " << l.instance.facts_of(r).size() << " facts, " << groups
                  << " key-equal groups of size > 1 covering " << in << " facts\n";
      }
      if (!l.constraints.empty()) {
        auto dcs = effective_constraints(s, l.constraints, KeyPath::denial);
        auto v = minimal_violations(dcs, l.instance);
        auto flags = consistent_flags(v, l.instance.size());
        auto involved = l.instance.size() - static_cast<std::size_t>(std::count(flags.begin() + 1, flags.end(), 1));
        std::cout << v.size() << " minimal violations, " << involved
                  << " facts involved\n";
      }
      return 0;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
