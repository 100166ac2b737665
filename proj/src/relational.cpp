#include "cqa/relational.hpp"

#include "cqa/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace cqa {

std::string_view to_string(ValueKind kind) {
  switch (kind) {
  case ValueKind::text:
    return "text";
  case ValueKind::integer:
    return "integer";
  case ValueKind::decimal:
    return "decimal";
  }
  return "?";
}

std::optional<ValueKind> parse_value_kind(std::string_view word) {
  if (word == "text")
    return ValueKind::text;
  if (word == "integer" || word == "int")
    return ValueKind::integer;
  if (word == "decimal")
    return ValueKind::decimal;
  return std::nullopt;
}

std::optional<Value> parse_value(std::string_view text, ValueKind kind) {
  switch (kind) {
  case ValueKind::text:
    return Value{std::string(text)};
  case ValueKind::integer: {
    std::int64_t v = 0;
    std::string_view s = text;
    if (!s.empty() && s.front() == '+')
      s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
      return std::nullopt;
    return Value{v};
  }
  case ValueKind::decimal: {
    double v = 0;
    std::string_view s = text;
    if (!s.empty() && s.front() == '+')
      s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
      return std::nullopt;
    return Value{v};
  }
  }
  return std::nullopt;
}

std::string format_value(const Value &v) {
  switch (kind_of(v)) {
  case ValueKind::text:
    return std::get<std::string>(v);
  case ValueKind::integer:
    return std::to_string(std::get<std::int64_t>(v));
  case ValueKind::decimal: {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
    return std::string(buf, ptr);
  }
  }
  return {};
}

namespace {
double as_double(const Value &v) {
  if (auto *i = std::get_if<std::int64_t>(&v))
    return static_cast<double>(*i);
  return std::get<double>(v);
}
} // namespace

int compare_values(const Value &a, const Value &b) {
  if (kind_of(a) == ValueKind::text || kind_of(b) == ValueKind::text) {
    const auto &x = std::get<std::string>(a);
    const auto &y = std::get<std::string>(b);
    int c = x.compare(y);
    return (c > 0) - (c < 0);
  }
  if (kind_of(a) == ValueKind::integer && kind_of(b) == ValueKind::integer) {
    auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
    return (x > y) - (x < y);
  }
  double x = as_double(a), y = as_double(b);
  return (x > y) - (x < y);
}

std::size_t ValuePool::Hash::operator()(const Value &v) const {
  std::size_t h = std::visit([](const auto &x) { return std::hash<std::decay_t<decltype(x)>>{}(x); }, v);
  return h ^ (v.index() * 0x9e3779b97f4a7c15ULL);
}

ValueId ValuePool::intern(const Value &v) {
  auto [it, inserted] = index_.try_emplace(v, static_cast<ValueId>(values_.size()));
  if (inserted)
    values_.push_back(v);
  return it->second;
}

std::optional<ValueId> ValuePool::find(const Value &v) const {
  auto it = index_.find(v);
  if (it == index_.end())
    return std::nullopt;
  return it->second;
}

bool RelationSchema::is_key_position(std::size_t pos) const {
  return std::binary_search(key_positions.begin(), key_positions.end(), pos);
}

Schema::Schema(std::vector<RelationSchema> relations) : relations_(std::move(relations)) {
  for (RelationId i = 0; i < relations_.size(); ++i) {
    const auto &r = relations_[i];
    if (!by_name_.emplace(r.name, i).second)
      throw ValidationError("duplicate relation '" + r.name + "'");
    std::unordered_set<std::string> names;
    for (const auto &a : r.attributes)
      if (!names.insert(a.name).second)
        throw ValidationError("duplicate attribute '" + a.name + "' in relation " + r.name);
    for (auto p : r.key_positions)
      if (p >= r.arity())
        throw ValidationError("key position out of range in relation " + r.name);
  }
}

std::optional<RelationId> Schema::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end())
    return std::nullopt;
  return it->second;
}

RelationId Schema::id_of(std::string_view name) const {
  if (auto id = find(name))
    return *id;
  throw ValidationError("unknown relation '" + std::string(name) + "'");
}

std::string Schema::to_text() const {
  std::ostringstream out;
  for (const auto &r : relations_) {
    out << r.name << '(';
    for (std::size_t i = 0; i < r.arity(); ++i) {
      if (i)
        out << ", ";
      out << r.attributes[i].name << (r.is_key_position(i) ? "* " : " ") << to_string(r.attributes[i].kind);
    }
    out << ")\n";
  }
  return out.str();
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct LineCursor {
  std::string_view line;
  std::size_t base;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos])))
      ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < line.size() && line[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c))
      throw ParseError(base + pos, std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip_ws();
    if (pos >= line.size() || !is_ident_start(line[pos]))
      throw ParseError(base + pos, "expected identifier");
    std::size_t start = pos;
    while (pos < line.size() && is_ident_char(line[pos]))
      ++pos;
    return std::string(line.substr(start, pos - start));
  }
  bool at_end() {
    skip_ws();
    return pos >= line.size();
  }
};

} // namespace

Schema parse_schema(std::string_view text) {
  std::vector<RelationSchema> rels;
  std::size_t offset = 0;
  while (offset <= text.size()) {
    std::size_t nl = text.find('\n', offset);
    if (nl == std::string_view::npos)
      nl = text.size();
    std::string_view line = text.substr(offset, nl - offset);
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    LineCursor cur{line, offset};
    if (!cur.at_end()) {
      RelationSchema rel;
      rel.name = cur.ident();
      cur.expect('(');
      std::size_t index = 0;
      do {
        Attribute attr;
        attr.name = cur.ident();
        if (cur.eat('*'))
          rel.key_positions.push_back(index);
        std::string kind_word = cur.ident();
        auto kind = parse_value_kind(kind_word);
        if (!kind)
          throw ParseError(offset + cur.pos, "unknown value kind '" + kind_word + "'");
        attr.kind = *kind;
        rel.attributes.push_back(std::move(attr));
        ++index;
      } while (cur.eat(','));
      cur.expect(')');
      if (!cur.at_end())
        throw ParseError(offset + cur.pos, "trailing characters after relation declaration");
      rels.push_back(std::move(rel));
    }
    offset = nl + 1;
  }
  return Schema(std::move(rels));
}

std::vector<Value> Instance::values_of(FactId id) const {
  std::vector<Value> out;
  for (auto v : fact(id).values)
    out.push_back(pool_.get(v));
  return out;
}

std::string Instance::describe(FactId id) const {
  const Fact &f = fact(id);
  std::string s = schema_.at(f.relation).name + "(";
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (i)
      s += ", ";
    s += format_value(pool_.get(f.values[i]));
  }
  return s + ")";
}

std::vector<std::vector<FactId>> Instance::key_equal_groups(RelationId rel) const {
  const RelationSchema &rs = schema_.at(rel);
  std::vector<std::vector<FactId>> groups;
  if (!rs.has_key()) {
    for (FactId id : by_relation_.at(rel))
      groups.push_back({id});
    return groups;
  }
  const auto &ids = by_relation_.at(rel);
  std::vector<FactId> order(ids.begin(), ids.end());
  auto key_less = [&](FactId a, FactId b) {
    const auto &va = fact(a).values, &vb = fact(b).values;
    for (auto p : rs.key_positions)
      if (va[p] != vb[p])
        return va[p] < vb[p];
    return a < b;
  };
  auto key_eq = [&](FactId a, FactId b) {
    const auto &va = fact(a).values, &vb = fact(b).values;
    for (auto p : rs.key_positions)
      if (va[p] != vb[p])
        return false;
    return true;
  };
  std::sort(order.begin(), order.end(), key_less);
  groups.reserve(order.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && key_eq(order[i], order[j]))
      ++j;
    groups.emplace_back(order.begin() + i, order.begin() + j);
    i = j;
  }
  std::sort(groups.begin(), groups.end(), [](const auto &a, const auto &b) { return a.front() < b.front(); });
  return groups;
}

std::vector<std::vector<FactId>> Instance::key_equal_groups(std::string_view relation) const {
  return key_equal_groups(schema_.id_of(relation));
}

std::vector<std::vector<FactId>> Instance::all_key_equal_groups() const {
  std::vector<std::vector<FactId>> all;
  for (RelationId r = 0; r < schema_.size(); ++r) {
    auto g = key_equal_groups(r);
    all.insert(all.end(), std::make_move_iterator(g.begin()), std::make_move_iterator(g.end()));
  }
  return all;
}

Instance Instance::restrict_to(std::span<const FactId> ids) const {
  std::vector<FactId> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  InstanceBuilder b(schema_);
  for (FactId id : sorted) {
    auto vals = values_of(id);
    b.add(fact(id).relation, vals);
  }
  return std::move(b).build();
}

std::size_t InstanceBuilder::TupleHash::operator()(const std::vector<ValueId> &t) const {
  std::size_t h = 1469598103934665603ULL;
  for (auto v : t)
    h = (h ^ v) * 1099511628211ULL;
  return h;
}

InstanceBuilder::InstanceBuilder(Schema schema) {
  inst_.schema_ = std::move(schema);
  inst_.by_relation_.resize(inst_.schema_.size());
  seen_.resize(inst_.schema_.size());
}

FactId InstanceBuilder::add(RelationId rel, std::span<const Value> values) {
  const RelationSchema &rs = inst_.schema_.at(rel);
  if (values.size() != rs.arity())
    throw ValidationError("arity mismatch for relation " + rs.name + ": expected " + std::to_string(rs.arity()) +
                          ", got " + std::to_string(values.size()));
  std::vector<ValueId> ids;
  ids.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (kind_of(values[i]) != rs.attributes[i].kind)
      throw ValidationError("value kind mismatch in " + rs.name + "." + rs.attributes[i].name);
    ids.push_back(inst_.pool_.intern(values[i]));
  }
  auto [it, inserted] = seen_[rel].try_emplace(ids, static_cast<FactId>(inst_.facts_.size() + 1));
  if (!inserted)
    return it->second;
  Fact f{it->second, rel, std::move(ids)};
  inst_.facts_.push_back(std::move(f));
  inst_.by_relation_[rel].push_back(it->second);
  return it->second;
}

FactId InstanceBuilder::add(std::string_view relation, std::span<const Value> values) {
  return add(inst_.schema_.id_of(relation), values);
}

Instance InstanceBuilder::build() && {
  std::vector<char> used(inst_.pool_.size(), 0);
  std::size_t n = 0;
  for (const auto &f : inst_.facts_)
    for (auto v : f.values)
      if (!used[v]) {
        used[v] = 1;
        ++n;
      }
  inst_.active_domain_size_ = n;
  seen_.clear();
  return std::move(inst_);
}

namespace {

/// RFC-4180 record splitter. Returns false at end of input.
class CsvReader {
public:
  explicit CsvReader(std::string_view text) : text_(text) {}

  bool next(std::vector<std::string> &fields, std::size_t &line_no) {
    fields.clear();
    if (pos_ >= text_.size())
      return false;
    line_no = line_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    while (true) {
      if (pos_ >= text_.size()) {
        if (quoted)
          throw std::runtime_error("unterminated quoted field");
        fields.push_back(std::move(field));
        return true;
      }
      char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field += '"';
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n')
            ++line_;
          field += c;
        }
        continue;
      }
      if (c == '"' && field.empty() && !was_quoted) {
        quoted = true;
        was_quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') {
        // CRLF: handled on '\n'
      } else if (c == '\n') {
        ++line_;
        fields.push_back(std::move(field));
        return true;
      } else {
        if (was_quoted)
          throw std::runtime_error("characters after closing quote");
        field += c;
      }
    }
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

bool is_blank_record(const std::vector<std::string> &fields) {
  return fields.size() == 1 && fields[0].empty();
}

} // namespace

void ingest_csv(InstanceBuilder &builder, RelationId rel, std::string_view csv_text, const std::string &file_name) {
  const RelationSchema &rs = builder.schema().at(rel);
  CsvReader reader(csv_text);
  std::vector<std::string> fields;
  std::size_t line = 1;
  bool header_seen = false;
  std::vector<Value> row;
  try {
    while (reader.next(fields, line)) {
      if (is_blank_record(fields))
        continue;
      if (!header_seen) {
        header_seen = true;
        if (fields.size() != rs.arity())
          throw IngestError(file_name, line, "header has " + std::to_string(fields.size()) + " columns, relation " +
                                                 rs.name + " has arity " + std::to_string(rs.arity()));
        for (std::size_t i = 0; i < fields.size(); ++i)
          if (fields[i] != rs.attributes[i].name)
            throw IngestError(file_name, line, "header column " + std::to_string(i + 1) + " is '" + fields[i] +
                                                   "', expected '" + rs.attributes[i].name + "'");
        continue;
      }
      if (fields.size() != rs.arity())
        throw IngestError(file_name, line, "row has " + std::to_string(fields.size()) + " fields, expected " +
                                               std::to_string(rs.arity()));
      row.clear();
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].empty())
          throw IngestError(file_name, line, "NULL (empty) value in column " + rs.attributes[i].name);
        auto v = parse_value(fields[i], rs.attributes[i].kind);
        if (!v)
          throw IngestError(file_name, line, "cannot parse '" + fields[i] + "' as " +
                                                 std::string(to_string(rs.attributes[i].kind)) + " for column " +
                                                 rs.attributes[i].name);
        row.push_back(std::move(*v));
      }
      builder.add(rel, row);
    }
  } catch (const std::runtime_error &e) {
    if (dynamic_cast<const IngestError *>(&e))
      throw;
    throw IngestError(file_name, line, e.what());
  }
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Instance ingest(const Schema &schema, const std::filesystem::path &data_dir) {
  InstanceBuilder builder(schema);
  for (RelationId r = 0; r < schema.size(); ++r) {
    auto path = data_dir / (schema.at(r).name + ".csv");
    if (!std::filesystem::exists(path))
      throw IngestError(path.string(), 0, "missing data file for relation " + schema.at(r).name);
    ingest_csv(builder, r, read_file(path), path.string());
  }
  return std::move(builder).build();
}

namespace {
std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}
} // namespace

std::string relation_to_csv(const Instance &inst, RelationId rel) {
  const RelationSchema &rs = inst.schema().at(rel);
  std::string out;
  for (std::size_t i = 0; i < rs.arity(); ++i) {
    if (i)
      out += ',';
    out += csv_field(rs.attributes[i].name);
  }
  out += '\n';
  for (FactId id : inst.facts_of(rel)) {
    const Fact &f = inst.fact(id);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (i)
        out += ',';
      out += csv_field(format_value(inst.value(f.values[i])));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Instance &inst, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  for (RelationId r = 0; r < inst.schema().size(); ++r) {
    std::ofstream out(dir / (inst.schema().at(r).name + ".csv"), std::ios::binary);
    if (!out)
      throw Error("cannot write " + (dir / (inst.schema().at(r).name + ".csv")).string());
    out << relation_to_csv(inst, r);
  }
}

} // namespace cqa
