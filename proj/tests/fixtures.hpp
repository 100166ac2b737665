#pragma once

#include "cqa/query.hpp"
#include "cqa/relational.hpp"

#include <filesystem>
#include <string>

namespace cqa::testing {

inline std::filesystem::path samples_dir() { return CQA_SAMPLES_DIR; }

inline Schema flights_schema() { return parse_schema(read_file(samples_dir() / "flights" / "schema.txt")); }

inline Instance flights() { return ingest(flights_schema(), samples_dir() / "flights"); }

inline UnionQuery flights_query(const std::string &file) {
  return parse_query(read_file(samples_dir() / "flights" / file), flights_schema());
}

inline std::vector<DenialConstraint> flights_constraints(const std::string &file) {
  return parse_constraints(read_file(samples_dir() / "flights" / file), flights_schema());
}

inline std::vector<Value> text_tuple(std::initializer_list<const char *> items) {
  std::vector<Value> out;
  for (const char *s : items)
    out.emplace_back(std::string(s));
  return out;
}

inline Instance make_instance(const std::string &schema_text,
                              std::initializer_list<std::pair<const char *, std::vector<Value>>> facts) {
  InstanceBuilder b(parse_schema(schema_text));
  for (const auto &[rel, vals] : facts)
    b.add(rel, vals);
  return std::move(b).build();
}

} // namespace cqa::testing
