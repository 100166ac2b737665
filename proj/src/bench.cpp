#include "cqa/bench.hpp"

#include "cqa/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <sstream>

namespace cqa {

namespace {

double median(std::vector<double> v) {
  if (v.empty())
    return 0;
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

const std::vector<std::string> columns{"query",      "rsize",         "indeg",         "strategy",
                                       "optimize",   "variables",     "clauses",       "encode_seconds",
                                       "solve_seconds", "wall_seconds", "iterations",  "answers",
                                       "consistent", "inconsistent",  "unknown",       "error"};

std::vector<std::string> fields(const BenchRecord &r) {
  auto num = [](double d) {
    std::ostringstream o;
    o << std::setprecision(6) << d;
    return o.str();
  };
  return {r.query,
          std::to_string(r.rsize),
          num(r.indeg),
          std::string(to_string(r.strategy)),
          r.optimize ? "1" : "0",
          std::to_string(r.variables),
          std::to_string(r.clauses),
          num(r.encode_seconds),
          num(r.solve_seconds),
          num(r.wall_seconds),
          std::to_string(r.iterations),
          std::to_string(r.answers),
          std::to_string(r.consistent),
          std::to_string(r.inconsistent),
          std::to_string(r.unknown),
          r.error};
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s)
    out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

} // namespace

std::vector<BenchRecord> run_bench(const BenchPlan &plan) {
  using Clock = std::chrono::steady_clock;
  std::vector<BenchRecord> out;
  for (const auto &name : plan.queries) {
    CatalogEntry entry = query_catalog(name);
    for (std::size_t rsize : plan.rsizes)
      for (double indeg : plan.indegs) {
        GenConfig gc;
        gc.rsize = rsize;
        gc.indeg = indeg;
        gc.seed = plan.seed;
        std::optional<Generated> data;
        std::string gen_error;
        try {
          data = generate(entry, gc);
        } catch (const std::exception &e) {
          gen_error = e.what();
        }
        for (Strategy st : plan.strategies)
          for (bool opt : plan.optimize) {
            BenchRecord rec;
            rec.query = name;
            rec.rsize = rsize;
            rec.indeg = indeg;
            rec.strategy = st;
            rec.optimize = opt;
            rec.error = gen_error;
            if (data) {
              EngineOptions eo = plan.engine;
              eo.strategy = st;
              eo.optimize = opt;
              std::vector<double> enc, sol, wall;
              try {
                for (std::size_t rep = 0; rep < std::max<std::size_t>(1, plan.repetitions); ++rep) {
                  auto t0 = Clock::now();
                  AnswerReport ar = consistent_answers(entry.query, data->instance, entry.constraints, eo);
                  wall.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
                  enc.push_back(ar.encode_seconds);
                  sol.push_back(ar.solve_seconds);
                  rec.variables = ar.variables;
                  rec.clauses = ar.clauses();
                  rec.iterations = ar.iterations;
                  rec.answers = ar.answers.size();
                  rec.consistent = ar.count(Verdict::consistent);
                  rec.inconsistent = ar.count(Verdict::inconsistent);
                  rec.unknown = ar.count(Verdict::unknown);
                }
              } catch (const std::exception &e) {
                rec.error = e.what();
              }
              rec.encode_seconds = median(enc);
              rec.solve_seconds = median(sol);
              rec.wall_seconds = median(wall);
            }
            out.push_back(std::move(rec));
          }
      }
  }
  return out;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "csv")
    return ReportFormat::csv;
  if (text == "json")
    return ReportFormat::json;
  if (text == "table")
    return ReportFormat::table;
  return std::nullopt;
}

std::string bench_report(const std::vector<BenchRecord> &records, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
  case ReportFormat::csv: {
    for (std::size_t i = 0; i < columns.size(); ++i)
      out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    for (const auto &r : records) {
      auto f = fields(r);
      for (std::size_t i = 0; i < f.size(); ++i)
        out << csv_field(f[i]) << (i + 1 < f.size() ? "," : "\n");
    }
    break;
  }
  case ReportFormat::json: {
    nlohmann::json j = nlohmann::json::array();
    for (const auto &r : records)
      j.push_back({{"query", r.query},
                   {"rsize", r.rsize},
                   {"indeg", r.indeg},
                   {"strategy", to_string(r.strategy)},
                   {"optimize", r.optimize},
                   {"variables", r.variables},
                   {"clauses", r.clauses},
                   {"encode_seconds", r.encode_seconds},
                   {"solve_seconds", r.solve_seconds},
                   {"wall_seconds", r.wall_seconds},
                   {"iterations", r.iterations},
                   {"answers", r.answers},
                   {"consistent", r.consistent},
                   {"inconsistent", r.inconsistent},
                   {"unknown", r.unknown},
                   {"error", r.error}});
    out << j.dump(2) << "\n";
    break;
  }
  case ReportFormat::table: {
    std::vector<std::vector<std::string>> rows{columns};
    for (const auto &r : records)
      rows.push_back(fields(r));
    std::vector<std::size_t> width(columns.size(), 0);
    for (const auto &row : rows)
      for (std::size_t i = 0; i < row.size(); ++i)
        width[i] = std::max(width[i], row[i].size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (std::size_t i = 0; i < rows[k].size(); ++i) {
        // Text columns left-aligned, numbers right-aligned.
        bool left = i == 0 || i == 3 || i + 1 == rows[k].size() || k == 0;
        out << (left ? std::left : std::right) << std::setw(static_cast<int>(width[i])) << rows[k][i];
        out << (i + 1 < rows[k].size() ? "  " : "\n");
      }
    }
    break;
  }
  }
  return out.str();
}

std::vector<BenchRecord> parse_bench_json(std::string_view text) {
  std::vector<BenchRecord> out;
  auto j = nlohmann::json::parse(text);
  for (const auto &o : j) {
    BenchRecord r;
    r.query = o.at("query").get<std::string>();
    r.rsize = o.at("rsize").get<std::size_t>();
    r.indeg = o.at("indeg").get<double>();
    auto st = parse_strategy(o.at("strategy").get<std::string>());
    if (!st)
      throw ValidationError("unknown strategy in bench record");
    r.strategy = *st;
    r.optimize = o.at("optimize").get<bool>();
    r.variables = o.at("variables").get<std::size_t>();
    r.clauses = o.at("clauses").get<std::size_t>();
    r.encode_seconds = o.at("encode_seconds").get<double>();
    r.solve_seconds = o.at("solve_seconds").get<double>();
    r.wall_seconds = o.at("wall_seconds").get<double>();
    r.iterations = o.at("iterations").get<std::size_t>();
    r.answers = o.at("answers").get<std::size_t>();
    r.consistent = o.at("consistent").get<std::size_t>();
    r.inconsistent = o.at("inconsistent").get<std::size_t>();
    r.unknown = o.at("unknown").get<std::size_t>();
    r.error = o.at("error").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace cqa
