#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace cqa {

enum class ValueKind : std::uint8_t { text, integer, decimal };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> parse_value_kind(std::string_view word);

/// A typed attribute value. The variant index matches ValueKind.
using Value = std::variant<std::string, std::int64_t, double>;

inline ValueKind kind_of(const Value &v) { return static_cast<ValueKind>(v.index()); }
inline bool is_numeric(ValueKind k) { return k != ValueKind::text; }

/// Parses `text` as a value of `kind`; nullopt when it does not parse.
std::optional<Value> parse_value(std::string_view text, ValueKind kind);
std::string format_value(const Value &v);

/// Three-way comparison: byte-lexicographic for text, numeric for numbers.
/// Text vs number is a caller error (rejected at validation time).
int compare_values(const Value &a, const Value &b);

using ValueId = std::uint32_t;
using FactId = std::uint32_t;
using RelationId = std::uint32_t;

/// Interns values so joins compare 32-bit ids. Two values get the same id iff
/// they have the same kind and the same content.
class ValuePool {
public:
  ValueId intern(const Value &v);
  std::optional<ValueId> find(const Value &v) const;
  const Value &get(ValueId id) const { return values_[id]; }
  std::size_t size() const { return values_.size(); }

private:
  struct Hash {
    std::size_t operator()(const Value &v) const;
  };
  std::vector<Value> values_;
  std::unordered_map<Value, ValueId, Hash> index_;
};

struct Attribute {
  std::string name;
  ValueKind kind = ValueKind::text;
};

struct RelationSchema {
  std::string name;
  std::vector<Attribute> attributes;
  /// 0-based positions of the key attributes, ascending. Empty: no key.
  std::vector<std::size_t> key_positions;

  std::size_t arity() const { return attributes.size(); }
  bool has_key() const { return !key_positions.empty(); }
  bool is_key_position(std::size_t pos) const;
};

/// Ordered set of relation schemas.
class Schema {
public:
  Schema() = default;
  explicit Schema(std::vector<RelationSchema> relations);

  std::span<const RelationSchema> relations() const { return relations_; }
  std::size_t size() const { return relations_.size(); }
  const RelationSchema &at(RelationId id) const { return relations_.at(id); }
  std::optional<RelationId> find(std::string_view name) const;
  RelationId id_of(std::string_view name) const; // throws ValidationError

  /// Text form accepted by parse_schema.
  std::string to_text() const;

private:
  std::vector<RelationSchema> relations_;
  std::unordered_map<std::string, RelationId> by_name_;
};

/// Parses schema text: one relation per line, e.g.
///   Flights(CODE* text, DATE* text, AIRLINE text)
/// `*` after an attribute name marks a key attribute. `#` starts a comment.
Schema parse_schema(std::string_view text);

struct Fact {
  FactId id = 0;
  RelationId relation = 0;
  std::vector<ValueId> values;
};

/// Immutable set of facts with global, dense fact ids 1..n in insertion order.
class Instance {
public:
  const Schema &schema() const { return schema_; }
  const ValuePool &values() const { return pool_; }
  std::size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }

  const Fact &fact(FactId id) const { return facts_.at(id - 1); }
  std::span<const Fact> facts() const { return facts_; }
  std::span<const FactId> facts_of(RelationId rel) const { return by_relation_.at(rel); }

  const Value &value(ValueId id) const { return pool_.get(id); }
  std::vector<Value> values_of(FactId id) const;
  /// Number of distinct values occurring in facts.
  std::size_t active_domain_size() const { return active_domain_size_; }

  /// Human-readable `Rel(v1, v2, ...)`.
  std::string describe(FactId id) const;

  /// Partition of the relation's facts into key-equal groups, ordered by the
  /// smallest fact id of each group; ids within a group ascending. Relations
  /// without a key yield singletons.
  std::vector<std::vector<FactId>> key_equal_groups(RelationId rel) const;
  std::vector<std::vector<FactId>> key_equal_groups(std::string_view relation) const;
  /// Key-equal groups of all relations, relation by relation.
  std::vector<std::vector<FactId>> all_key_equal_groups() const;

  /// Sub-instance containing only the given facts, renumbered densely in
  /// ascending order of the given ids.
  Instance restrict_to(std::span<const FactId> ids) const;

private:
  friend class InstanceBuilder;
  Schema schema_;
  ValuePool pool_;
  std::vector<Fact> facts_;
  std::vector<std::vector<FactId>> by_relation_;
  std::size_t active_domain_size_ = 0;
};

/// Collects facts, deduplicating identical tuples per relation.
class InstanceBuilder {
public:
  explicit InstanceBuilder(Schema schema);

  /// Returns the fact id, or the id of the existing identical fact.
  FactId add(RelationId rel, std::span<const Value> values);
  FactId add(std::string_view relation, std::span<const Value> values);
  const Schema &schema() const { return inst_.schema_; }
  Instance build() &&;

private:
  struct TupleHash {
    std::size_t operator()(const std::vector<ValueId> &t) const;
  };
  Instance inst_;
  std::vector<std::unordered_map<std::vector<ValueId>, FactId, TupleHash>> seen_;
};

/// Reads `<dir>/<Relation>.csv` for every relation of `schema`. The header row
/// must list the attribute names in schema order. Errors name file and line.
Instance ingest(const Schema &schema, const std::filesystem::path &data_dir);
/// Adds the rows of one CSV stream for relation `rel` to `builder`.
void ingest_csv(InstanceBuilder &builder, RelationId rel, std::string_view csv_text,
                const std::string &file_name);

/// Writes one CSV file per relation into `dir` (created if missing).
void write_csv(const Instance &inst, const std::filesystem::path &dir);
std::string relation_to_csv(const Instance &inst, RelationId rel);

std::string read_file(const std::filesystem::path &path);

} // namespace cqa
