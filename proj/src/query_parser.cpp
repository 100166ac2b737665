#include "cqa/error.hpp"
#include "cqa/query.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace cqa {

std::string_view to_string(CompareOp op) {
  switch (op) {
  case CompareOp::eq:
    return "=";
  case CompareOp::ne:
    return "!=";
  case CompareOp::lt:
    return "<";
  case CompareOp::gt:
    return ">";
  case CompareOp::le:
    return "<=";
  case CompareOp::ge:
    return ">=";
  }
  return "?";
}

bool holds(CompareOp op, int c) {
  switch (op) {
  case CompareOp::eq:
    return c == 0;
  case CompareOp::ne:
    return c != 0;
  case CompareOp::lt:
    return c < 0;
  case CompareOp::gt:
    return c > 0;
  case CompareOp::le:
    return c <= 0;
  case CompareOp::ge:
    return c >= 0;
  }
  return false;
}

std::string Term::to_text() const {
  if (is_variable())
    return variable();
  const Value &v = constant();
  if (kind_of(v) != ValueKind::text)
    return format_value(v);
  std::string out = "'";
  for (char c : std::get<std::string>(v)) {
    if (c == '\'')
      out += '\'';
    out += c;
  }
  return out + "'";
}

std::string RelationalAtom::to_text() const {
  std::string s = relation + "(";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i)
      s += ", ";
    s += terms[i].to_text();
  }
  return s + ")";
}

std::string BuiltinAtom::to_text() const {
  return lhs.to_text() + " " + std::string(to_string(op)) + " " + rhs.to_text();
}

namespace {
std::string body_text(const std::vector<RelationalAtom> &atoms, const std::vector<BuiltinAtom> &builtins) {
  std::string s;
  for (const auto &a : atoms) {
    if (!s.empty())
      s += ", ";
    s += a.to_text();
  }
  for (const auto &b : builtins) {
    if (!s.empty())
      s += ", ";
    s += b.to_text();
  }
  return s;
}
} // namespace

std::string ConjunctiveQuery::to_text() const {
  std::string s = name + "(";
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (i)
      s += ", ";
    s += head[i];
  }
  return s + ") :- " + body_text(atoms, builtins);
}

std::size_t UnionQuery::max_atoms() const {
  std::size_t m = 0;
  for (const auto &q : disjuncts)
    m = std::max(m, q.atoms.size());
  return m;
}

std::string UnionQuery::to_text() const {
  std::string s;
  for (std::size_t i = 0; i < disjuncts.size(); ++i) {
    if (i)
      s += " ;\n";
    s += disjuncts[i].to_text();
  }
  return s;
}

ConjunctiveQuery DenialConstraint::as_query() const {
  ConjunctiveQuery q;
  q.name = "violation";
  q.atoms = atoms;
  q.builtins = builtins;
  return q;
}

std::string DenialConstraint::to_text() const { return "!( " + body_text(atoms, builtins) + " )"; }

namespace {

enum class Tok { ident, string, number, lparen, rparen, comma, semicolon, turnstile, bang, op, dot, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  CompareOp op = CompareOp::eq;
  std::size_t pos = 0;
};

class Lexer {
public:
  explicit Lexer(std::string_view s) : s_(s) { advance(); }

  const Token &peek() const { return cur_; }
  Token take() {
    Token t = cur_;
    advance();
    return t;
  }
  Token expect(Tok kind, const char *what) {
    if (cur_.kind != kind)
      throw ParseError(cur_.pos, std::string("expected ") + what);
    return take();
  }
  bool accept(Tok kind) {
    if (cur_.kind != kind)
      return false;
    advance();
    return true;
  }

private:
  void skip_ws_and_comments() {
    while (i_ < s_.size()) {
      char c = s_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i_;
      } else if (c == '#' || (c == '%')) {
        while (i_ < s_.size() && s_[i_] != '\n')
          ++i_;
      } else {
        break;
      }
    }
  }

  bool starts(std::string_view lit) const { return s_.substr(i_, lit.size()) == lit; }

  void advance() {
    skip_ws_and_comments();
    cur_ = Token{};
    cur_.pos = i_;
    if (i_ >= s_.size()) {
      cur_.kind = Tok::end;
      return;
    }
    char c = s_[i_];
    auto single = [&](Tok k) {
      cur_.kind = k;
      cur_.text = std::string(1, c);
      ++i_;
    };
    auto op = [&](CompareOp o, std::size_t len) {
      cur_.kind = Tok::op;
      cur_.op = o;
      cur_.text = std::string(s_.substr(i_, len));
      i_ += len;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '\''))
        ++i_;
      cur_.kind = Tok::ident;
      cur_.text = std::string(s_.substr(start, i_ - start));
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+') && i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
      std::size_t start = i_++;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_])))
        ++i_;
      if (i_ + 1 < s_.size() && s_[i_] == '.' && std::isdigit(static_cast<unsigned char>(s_[i_ + 1]))) {
        ++i_;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_])))
          ++i_;
        if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
          ++i_;
          if (i_ < s_.size() && (s_[i_] == '-' || s_[i_] == '+'))
            ++i_;
          while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_])))
            ++i_;
        }
      }
      cur_.kind = Tok::number;
      cur_.text = std::string(s_.substr(start, i_ - start));
      return;
    }
    if (c == '\'' || c == '"') {
      char quote = c;
      std::size_t start = i_++;
      std::string text;
      while (true) {
        if (i_ >= s_.size())
          throw ParseError(start, "unterminated string constant");
        if (s_[i_] == quote) {
          if (i_ + 1 < s_.size() && s_[i_ + 1] == quote) {
            text += quote;
            i_ += 2;
            continue;
          }
          ++i_;
          break;
        }
        text += s_[i_++];
      }
      cur_.kind = Tok::string;
      cur_.text = std::move(text);
      return;
    }
    if (starts(":-")) {
      cur_.kind = Tok::turnstile;
      cur_.text = ":-";
      i_ += 2;
      return;
    }
    if (starts("!="))
      return op(CompareOp::ne, 2);
    if (starts("<>"))
      return op(CompareOp::ne, 2);
    if (starts("<="))
      return op(CompareOp::le, 2);
    if (starts(">="))
      return op(CompareOp::ge, 2);
    if (starts("≠"))
      return op(CompareOp::ne, 3);
    if (starts("≤"))
      return op(CompareOp::le, 3);
    if (starts("≥"))
      return op(CompareOp::ge, 3);
    switch (c) {
    case '(':
      return single(Tok::lparen);
    case ')':
      return single(Tok::rparen);
    case ',':
      return single(Tok::comma);
    case ';':
      return single(Tok::semicolon);
    case '!':
      return single(Tok::bang);
    case '.':
      return single(Tok::dot);
    case '=':
      return op(CompareOp::eq, 1);
    case '<':
      return op(CompareOp::lt, 1);
    case '>':
      return op(CompareOp::gt, 1);
    default:
      throw ParseError(i_, std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  Token cur_;
};

Value number_value(const Token &t) {
  if (t.text.find_first_of(".eE") == std::string::npos) {
    if (auto v = parse_value(t.text, ValueKind::integer))
      return *v;
  }
  if (auto v = parse_value(t.text, ValueKind::decimal))
    return *v;
  throw ParseError(t.pos, "bad number '" + t.text + "'");
}

Term parse_term(Lexer &lex) {
  const Token &t = lex.peek();
  switch (t.kind) {
  case Tok::ident:
    return Term::var(lex.take().text);
  case Tok::string:
    return Term::constant(Value{lex.take().text});
  case Tok::number:
    return Term::constant(number_value(lex.take()));
  default:
    throw ParseError(t.pos, "expected variable or constant");
  }
}

/// Parses `atom_or_builtin (, atom_or_builtin)*` up to a terminator.
void parse_body(Lexer &lex, std::vector<RelationalAtom> &atoms, std::vector<BuiltinAtom> &builtins) {
  do {
    const Token &t = lex.peek();
    if (t.kind == Tok::ident) {
      Token name = lex.take();
      if (lex.peek().kind == Tok::lparen) {
        lex.take();
        RelationalAtom atom;
        atom.relation = name.text;
        if (lex.peek().kind != Tok::rparen) {
          do {
            atom.terms.push_back(parse_term(lex));
          } while (lex.accept(Tok::comma));
        }
        lex.expect(Tok::rparen, "')'");
        atoms.push_back(std::move(atom));
        continue;
      }
      Token op = lex.expect(Tok::op, "comparison operator or '('");
      BuiltinAtom b;
      b.op = op.op;
      b.lhs = Term::var(name.text);
      b.rhs = parse_term(lex);
      builtins.push_back(std::move(b));
    } else {
      BuiltinAtom b;
      b.lhs = parse_term(lex);
      b.op = lex.expect(Tok::op, "comparison operator").op;
      b.rhs = parse_term(lex);
      builtins.push_back(std::move(b));
    }
  } while (lex.accept(Tok::comma));
}

void collect_vars(const Term &t, std::set<std::string> &out) {
  if (t.is_variable())
    out.insert(t.variable());
}

void check_builtin_safety(const std::vector<RelationalAtom> &atoms, const std::vector<BuiltinAtom> &builtins,
                          const char *what) {
  std::set<std::string> bound;
  for (const auto &a : atoms)
    for (const auto &t : a.terms)
      collect_vars(t, bound);
  for (const auto &b : builtins)
    for (const Term *t : {&b.lhs, &b.rhs})
      if (t->is_variable() && !bound.count(t->variable()))
        throw ValidationError(std::string(what) + ": variable '" + t->variable() +
                              "' of comparison does not occur in a relational atom");
}

void check_query_safety(const ConjunctiveQuery &q) {
  std::set<std::string> bound;
  for (const auto &a : q.atoms)
    for (const auto &t : a.terms)
      collect_vars(t, bound);
  std::set<std::string> seen;
  for (const auto &h : q.head) {
    if (!seen.insert(h).second)
      throw ValidationError("head variable '" + h + "' repeated");
    if (!bound.count(h))
      throw ValidationError("unsafe query: head variable '" + h + "' does not occur in the body");
  }
  check_builtin_safety(q.atoms, q.builtins, "unsafe query");
}

} // namespace

UnionQuery parse_query(std::string_view text) {
  Lexer lex(text);
  UnionQuery uq;
  while (lex.peek().kind != Tok::end) {
    ConjunctiveQuery q;
    q.name = lex.expect(Tok::ident, "query name").text;
    lex.expect(Tok::lparen, "'('");
    if (lex.peek().kind != Tok::rparen) {
      do {
        q.head.push_back(lex.expect(Tok::ident, "head variable").text);
      } while (lex.accept(Tok::comma));
    }
    lex.expect(Tok::rparen, "')'");
    lex.expect(Tok::turnstile, "':-'");
    parse_body(lex, q.atoms, q.builtins);
    if (q.atoms.empty())
      throw ValidationError("query '" + q.name + "' has no relational atom");
    check_query_safety(q);
    if (!uq.disjuncts.empty() && uq.disjuncts.front().arity() != q.arity())
      throw ValidationError("disjuncts of a union must have the same head arity");
    uq.disjuncts.push_back(std::move(q));
    while (lex.accept(Tok::semicolon) || lex.accept(Tok::dot)) {
    }
  }
  if (uq.disjuncts.empty())
    throw ParseError(0, "empty query");
  return uq;
}

UnionQuery parse_query(std::string_view text, const Schema &schema) {
  UnionQuery q = parse_query(text);
  validate(q, schema);
  return q;
}

std::vector<DenialConstraint> parse_constraints(std::string_view text) {
  Lexer lex(text);
  std::vector<DenialConstraint> out;
  while (lex.peek().kind != Tok::end) {
    lex.expect(Tok::bang, "'!(' starting a denial constraint");
    lex.expect(Tok::lparen, "'('");
    DenialConstraint dc;
    parse_body(lex, dc.atoms, dc.builtins);
    lex.expect(Tok::rparen, "')'");
    if (dc.atoms.empty())
      throw ValidationError("denial constraint without relational atom");
    check_builtin_safety(dc.atoms, dc.builtins, "denial constraint");
    out.push_back(std::move(dc));
    while (lex.accept(Tok::semicolon) || lex.accept(Tok::dot)) {
    }
  }
  return out;
}

std::vector<DenialConstraint> parse_constraints(std::string_view text, const Schema &schema) {
  auto dcs = parse_constraints(text);
  for (auto &dc : dcs)
    validate(dc, schema);
  return dcs;
}

namespace {

/// Converts a numeric constant to `kind`; throws on text/number mismatch.
void coerce_constant(Value &v, ValueKind kind, const std::string &where) {
  ValueKind have = kind_of(v);
  if (have == kind)
    return;
  if (have == ValueKind::integer && kind == ValueKind::decimal) {
    v = static_cast<double>(std::get<std::int64_t>(v));
    return;
  }
  if (have == ValueKind::decimal && kind == ValueKind::integer) {
    double d = std::get<double>(v);
    auto i = static_cast<std::int64_t>(d);
    if (static_cast<double>(i) == d) {
      v = i;
      return;
    }
  }
  throw ValidationError("kind mismatch: constant " + format_value(v) + " (" + std::string(to_string(have)) +
                        ") used where " + std::string(to_string(kind)) + " is expected in " + where);
}

void validate_body(std::vector<RelationalAtom> &atoms, std::vector<BuiltinAtom> &builtins, const Schema &schema,
                   const std::string &where) {
  std::map<std::string, ValueKind> var_kind;
  for (auto &a : atoms) {
    RelationId rel = schema.id_of(a.relation);
    const RelationSchema &rs = schema.at(rel);
    if (a.terms.size() != rs.arity())
      throw ValidationError("atom " + a.to_text() + " has arity " + std::to_string(a.terms.size()) + ", relation " +
                            rs.name + " has arity " + std::to_string(rs.arity()) + " in " + where);
    for (std::size_t i = 0; i < a.terms.size(); ++i) {
      ValueKind k = rs.attributes[i].kind;
      Term &t = a.terms[i];
      if (t.is_variable()) {
        auto [it, inserted] = var_kind.try_emplace(t.variable(), k);
        if (!inserted && it->second != k)
          throw ValidationError("kind mismatch: variable '" + t.variable() + "' used as " +
                                std::string(to_string(it->second)) + " and " + std::string(to_string(k)) + " in " +
                                where);
      } else {
        coerce_constant(std::get<Value>(t.value), k, where);
      }
    }
  }
  for (auto &b : builtins) {
    auto kind_of_term = [&](const Term &t) {
      return t.is_variable() ? var_kind.at(t.variable()) : kind_of(t.constant());
    };
    if (b.lhs.is_variable() && !b.rhs.is_variable())
      coerce_constant(std::get<Value>(b.rhs.value), kind_of_term(b.lhs), where);
    else if (!b.lhs.is_variable() && b.rhs.is_variable())
      coerce_constant(std::get<Value>(b.lhs.value), kind_of_term(b.rhs), where);
    ValueKind l = kind_of_term(b.lhs), r = kind_of_term(b.rhs);
    if (is_numeric(l) != is_numeric(r) || (l != r && b.lhs.is_variable() && b.rhs.is_variable()))
      throw ValidationError("kind mismatch in comparison " + b.to_text() + " in " + where);
  }
}

} // namespace

void validate(ConjunctiveQuery &q, const Schema &schema) {
  check_query_safety(q);
  validate_body(q.atoms, q.builtins, schema, "query " + q.name);
}

void validate(UnionQuery &q, const Schema &schema) {
  if (q.disjuncts.empty())
    throw ValidationError("empty union query");
  for (auto &d : q.disjuncts) {
    if (d.arity() != q.disjuncts.front().arity())
      throw ValidationError("disjuncts of a union must have the same head arity");
    validate(d, schema);
  }
}

void validate(DenialConstraint &dc, const Schema &schema) {
  check_builtin_safety(dc.atoms, dc.builtins, "denial constraint");
  validate_body(dc.atoms, dc.builtins, schema, "constraint " + dc.to_text());
}

std::vector<DenialConstraint> key_constraints(const Schema &schema) {
  std::vector<DenialConstraint> out;
  for (const auto &rs : schema.relations()) {
    if (!rs.has_key())
      continue;
    for (std::size_t j = 0; j < rs.arity(); ++j) {
      if (rs.is_key_position(j))
        continue;
      RelationalAtom a{rs.name, {}}, b{rs.name, {}};
      for (std::size_t i = 0; i < rs.arity(); ++i) {
        std::string v = "v" + std::to_string(i + 1);
        if (rs.is_key_position(i)) {
          a.terms.push_back(Term::var(v));
          b.terms.push_back(Term::var(v));
        } else {
          a.terms.push_back(Term::var(v));
          b.terms.push_back(Term::var(v + "'"));
        }
      }
      std::string v = "v" + std::to_string(j + 1);
      DenialConstraint dc;
      dc.atoms = {std::move(a), std::move(b)};
      dc.builtins.push_back(BuiltinAtom{CompareOp::ne, Term::var(v), Term::var(v + "'")});
      out.push_back(std::move(dc));
    }
  }
  return out;
}

ConjunctiveQuery substitute(const ConjunctiveQuery &q, std::span<const Value> a) {
  if (a.size() != q.arity())
    throw ValidationError("substitute: answer has " + std::to_string(a.size()) + " values, query head has " +
                          std::to_string(q.arity()));
  std::map<std::string, Value> subst;
  for (std::size_t i = 0; i < a.size(); ++i)
    subst.emplace(q.head[i], a[i]);
  auto apply = [&](Term &t) {
    if (t.is_variable())
      if (auto it = subst.find(t.variable()); it != subst.end())
        t = Term::constant(it->second);
  };
  ConjunctiveQuery out = q;
  out.head.clear();
  for (auto &atom : out.atoms)
    for (auto &t : atom.terms)
      apply(t);
  for (auto &b : out.builtins) {
    apply(b.lhs);
    apply(b.rhs);
  }
  return out;
}

} // namespace cqa
