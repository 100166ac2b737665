#pragma once

#include "cqa/relational.hpp"

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cqa {

struct Variable {
  std::string name;
  bool operator==(const Variable &) const = default;
};

/// A variable or a typed constant.
struct Term {
  std::variant<Variable, Value> value;

  static Term var(std::string name) { return Term{Variable{std::move(name)}}; }
  static Term constant(Value v) { return Term{std::move(v)}; }

  bool is_variable() const { return value.index() == 0; }
  const std::string &variable() const { return std::get<Variable>(value).name; }
  const Value &constant() const { return std::get<Value>(value); }
  std::string to_text() const;
};

enum class CompareOp : std::uint8_t { eq, ne, lt, gt, le, ge };

std::string_view to_string(CompareOp op);
bool holds(CompareOp op, int three_way);

struct RelationalAtom {
  std::string relation;
  std::vector<Term> terms;
  std::string to_text() const;
};

struct BuiltinAtom {
  CompareOp op = CompareOp::eq;
  Term lhs;
  Term rhs;
  std::string to_text() const;
};

/// `name(head) :- atoms, builtins`. Body variables not in the head are
/// existentially quantified. An empty head makes the query boolean.
struct ConjunctiveQuery {
  std::string name = "q";
  std::vector<std::string> head;
  std::vector<RelationalAtom> atoms;
  std::vector<BuiltinAtom> builtins;

  bool is_boolean() const { return head.empty(); }
  std::size_t arity() const { return head.size(); }
  std::string to_text() const;
};

/// Union of conjunctive queries with a common head arity.
struct UnionQuery {
  std::vector<ConjunctiveQuery> disjuncts;

  std::size_t arity() const { return disjuncts.empty() ? 0 : disjuncts.front().arity(); }
  bool is_boolean() const { return arity() == 0; }
  /// Largest number of relational atoms over the disjuncts.
  std::size_t max_atoms() const;
  std::string to_text() const;
};

/// `!( atoms, builtins )`: forbids any assignment satisfying the conjunction.
struct DenialConstraint {
  std::vector<RelationalAtom> atoms;
  std::vector<BuiltinAtom> builtins;

  /// The body read as a boolean conjunctive query.
  ConjunctiveQuery as_query() const;
  std::string to_text() const;
};

/// Parses `q(x,y) :- R(x,z), S(z,y), z != 'a' ; q(x,y) :- T(x,y)`.
/// `;` separates disjuncts; a new rule may also simply follow the previous one.
/// Checks head safety and uniform head arity but not the schema.
UnionQuery parse_query(std::string_view text);
/// parse_query followed by validate().
UnionQuery parse_query(std::string_view text, const Schema &schema);

/// Parses a list of `!( ... )` constraints (usually one per line).
std::vector<DenialConstraint> parse_constraints(std::string_view text);
std::vector<DenialConstraint> parse_constraints(std::string_view text, const Schema &schema);

/// Checks relation names, arities and value kinds against `schema`, and
/// coerces numeric constants to the kind of the column they meet.
void validate(ConjunctiveQuery &q, const Schema &schema);
void validate(UnionQuery &q, const Schema &schema);
void validate(DenialConstraint &dc, const Schema &schema);

/// Expands every declared key `K -> Attr(R)` into one denial constraint per
/// non-key attribute: two key-equal facts may not differ there.
std::vector<DenialConstraint> key_constraints(const Schema &schema);

/// One homomorphism image: the head values and the set of facts used.
struct Witness {
  std::vector<ValueId> answer;
  std::vector<FactId> facts; // ascending, no duplicates
  bool operator==(const Witness &) const = default;
};

/// All homomorphisms of the body into `inst` that satisfy the builtins,
/// collapsed on (answer, fact set). `allowed`, when non-empty, is indexed by
/// fact id and restricts evaluation to facts with a nonzero entry.
/// Order: first discovery in a left-deep nested loop over the atoms in
/// written order, scanning facts in id order.
std::vector<Witness> evaluate(const ConjunctiveQuery &q, const Instance &inst,
                              std::span<const char> allowed = {});

/// Distinct answer tuples of a union query, in first-discovery order.
std::vector<std::vector<ValueId>> answers(const UnionQuery &q, const Instance &inst,
                                          std::span<const char> allowed = {});

/// q[a]: replaces each head variable by the matching constant of `a`
/// throughout the body and builtins; the result is boolean.
ConjunctiveQuery substitute(const ConjunctiveQuery &q, std::span<const Value> a);

} // namespace cqa
