#pragma once

#include "cqa/datagen.hpp"
#include "cqa/engine.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cqa {

struct BenchRecord {
  std::string query;
  std::size_t rsize = 0;
  double indeg = 0;
  Strategy strategy = Strategy::maxsat;
  bool optimize = true;
  std::size_t variables = 0;
  std::size_t clauses = 0;
  double encode_seconds = 0; // median over repetitions
  double solve_seconds = 0;  // median over repetitions
  double wall_seconds = 0;   // median over repetitions
  std::size_t iterations = 0;
  std::size_t answers = 0;
  std::size_t consistent = 0;
  std::size_t inconsistent = 0;
  std::size_t unknown = 0;
  std::string error; // empty when the cell ran

  bool operator==(const BenchRecord &) const = default;
};

struct BenchPlan {
  std::vector<std::string> queries;
  std::vector<std::size_t> rsizes{10000};
  std::vector<double> indegs{10};
  std::vector<Strategy> strategies{Strategy::maxsat};
  std::vector<bool> optimize{true};
  std::size_t repetitions = 1;
  std::uint64_t seed = 1;
  EngineOptions engine; // strategy and optimize are overridden per cell
};

/// One record per (query, rsize, indeg, strategy, optimize), in that nesting
/// order. Data is generated once per (query, rsize, indeg). Engine errors are
/// recorded in the cell and the sweep continues.
std::vector<BenchRecord> run_bench(const BenchPlan &plan);

enum class ReportFormat : std::uint8_t { csv, json, table };
std::optional<ReportFormat> parse_report_format(std::string_view text);

std::string bench_report(const std::vector<BenchRecord> &records, ReportFormat format);
std::vector<BenchRecord> parse_bench_json(std::string_view text);

} // namespace cqa
