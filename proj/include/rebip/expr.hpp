#ifndef REBIP_EXPR_HPP
#define REBIP_EXPR_HPP

#include "rebip/value.hpp"

#include <cctype>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace rebip {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class UnOp { Neg, Not };
enum class BinOp { Add, Sub, Mul, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression AST. Variable references keep their raw (possibly dotted)
/// name; resolution against a valuation happens at evaluation time.
struct Expr {
  enum class Kind { Lit, Var, Unary, Binary } kind;
  Value lit;
  std::string var;
  UnOp un{};
  BinOp bin{};
  ExprPtr lhs, rhs;

  static ExprPtr literal(Value v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Lit;
    e->lit = std::move(v);
    return e;
  }
  static ExprPtr variable(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    e->var = std::move(name);
    return e;
  }
  static ExprPtr unary(UnOp op, ExprPtr sub) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Unary;
    e->un = op;
    e->lhs = std::move(sub);
    return e;
  }
  static ExprPtr binary(BinOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Binary;
    e->bin = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
  }
};

inline ExprPtr expr_true() { return Expr::literal(Value(true)); }

inline bool is_literal_true(const ExprPtr& e) {
  return e && e->kind == Expr::Kind::Lit && e->lit.is_bool() && e->lit.as_bool();
}

inline Value eval_expr(const ExprPtr& e, const Valuation& v) {
  switch (e->kind) {
    case Expr::Kind::Lit:
      return e->lit;
    case Expr::Kind::Var: {
      auto it = v.find(e->var);
      if (it == v.end()) throw EvalError("unbound variable '" + e->var + "'");
      return it->second;
    }
    case Expr::Kind::Unary: {
      Value s = eval_expr(e->lhs, v);
      if (e->un == UnOp::Neg) return Value(checked_neg(s.as_int()));
      return Value(!s.as_bool());
    }
    case Expr::Kind::Binary: {
      // Short-circuit the logical operators.
      if (e->bin == BinOp::And) {
        if (!eval_expr(e->lhs, v).as_bool()) return Value(false);
        return Value(eval_expr(e->rhs, v).as_bool());
      }
      if (e->bin == BinOp::Or) {
        if (eval_expr(e->lhs, v).as_bool()) return Value(true);
        return Value(eval_expr(e->rhs, v).as_bool());
      }
      Value a = eval_expr(e->lhs, v);
      Value b = eval_expr(e->rhs, v);
      switch (e->bin) {
        case BinOp::Add: return Value(checked_add(a.as_int(), b.as_int()));
        case BinOp::Sub: return Value(checked_sub(a.as_int(), b.as_int()));
        case BinOp::Mul: return Value(checked_mul(a.as_int(), b.as_int()));
        case BinOp::Eq: return Value(a.equals_checked(b));
        case BinOp::Ne: return Value(!a.equals_checked(b));
        case BinOp::Lt: return Value(a.as_int() < b.as_int());
        case BinOp::Le: return Value(a.as_int() <= b.as_int());
        case BinOp::Gt: return Value(a.as_int() > b.as_int());
        case BinOp::Ge: return Value(a.as_int() >= b.as_int());
        default: break;
      }
      break;
    }
  }
  throw EvalError("malformed expression node");
}

inline void collect_vars(const ExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind == Expr::Kind::Var) out.insert(e->var);
  collect_vars(e->lhs, out);
  collect_vars(e->rhs, out);
}

// ---------------------------------------------------------------------------
// Printing. Canonical form uses &&, ||, !, =, != and minimal parentheses.
// ---------------------------------------------------------------------------

inline int precedence(BinOp op) {
  switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return 3;
    case BinOp::Add:
    case BinOp::Sub: return 4;
    case BinOp::Mul: return 5;
  }
  return 0;
}

inline const char* op_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Eq: return "=";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
  }
  return "?";
}

inline std::string expr_to_string(const ExprPtr& e, int parent_prec = 0) {
  switch (e->kind) {
    case Expr::Kind::Lit:
      return e->lit.to_string();
    case Expr::Kind::Var:
      return e->var;
    case Expr::Kind::Unary: {
      std::string inner = expr_to_string(e->lhs, 6);
      return (e->un == UnOp::Neg ? "-" : "!") + inner;
    }
    case Expr::Kind::Binary: {
      int p = precedence(e->bin);
      std::string s = expr_to_string(e->lhs, p) + " " + op_symbol(e->bin) + " " +
                      expr_to_string(e->rhs, p + 1);
      if (p < parent_prec) return "(" + s + ")";
      return s;
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parsing: a small recursive-descent parser over the guard/update grammar.
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
  enum class Kind { Ident, Int, Str, Op, End } kind;
  std::string text;
  int64_t ival = 0;
  size_t col = 0;
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) pos_++;
    tok_.col = pos_ + 1;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::Kind::End;
      tok_.text.clear();
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      // Identifiers may be dotted qualified references; primes appear in
      // transformation-generated location names.
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
              src_[pos_] == '.' || src_[pos_] == '\''))
        pos_++;
      tok_.kind = Token::Kind::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) pos_++;
      tok_.kind = Token::Kind::Int;
      tok_.text = src_.substr(start, pos_ - start);
      try {
        tok_.ival = std::stoll(tok_.text);
      } catch (const std::out_of_range&) {
        throw ParseError("integer literal out of range at column " + std::to_string(tok_.col));
      }
      return;
    }
    if (c == '"') {
      pos_++;
      std::string s;
      while (pos_ < src_.size() && src_[pos_] != '"') s.push_back(src_[pos_++]);
      if (pos_ >= src_.size())
        throw ParseError("unterminated string literal at column " + std::to_string(tok_.col));
      pos_++;
      tok_.kind = Token::Kind::Str;
      tok_.text = s;
      return;
    }
    static const char* two_char[] = {"&&", "||", "<=", ">=", "!=", "==", ":="};
    for (const char* op : two_char) {
      if (src_.compare(pos_, 2, op) == 0) {
        tok_.kind = Token::Kind::Op;
        tok_.text = op;
        pos_ += 2;
        return;
      }
    }
    tok_.kind = Token::Kind::Op;
    tok_.text = std::string(1, c);
    pos_++;
  }

  const std::string& src_;
  size_t pos_ = 0;
  Token tok_;
};

class ExprParser {
public:
  explicit ExprParser(const std::string& src) : lex_(src) {}

  ExprPtr parse_full() {
    ExprPtr e = parse_or();
    expect_end();
    return e;
  }

  ExprPtr parse_or() {
    ExprPtr e = parse_and();
    while (match_op("||") || match_ident("or")) e = Expr::binary(BinOp::Or, e, parse_and());
    return e;
  }

  void expect_end() {
    if (lex_.peek().kind != Token::Kind::End)
      throw ParseError("unexpected token '" + lex_.peek().text + "' at column " +
                       std::to_string(lex_.peek().col));
  }

private:
  ExprPtr parse_and() {
    ExprPtr e = parse_cmp();
    while (match_op("&&") || match_ident("and")) e = Expr::binary(BinOp::And, e, parse_cmp());
    return e;
  }

  ExprPtr parse_cmp() {
    ExprPtr e = parse_add();
    for (;;) {
      if (match_op("=") || match_op("==")) e = Expr::binary(BinOp::Eq, e, parse_add());
      else if (match_op("!=")) e = Expr::binary(BinOp::Ne, e, parse_add());
      else if (match_op("<=")) e = Expr::binary(BinOp::Le, e, parse_add());
      else if (match_op(">=")) e = Expr::binary(BinOp::Ge, e, parse_add());
      else if (match_op("<")) e = Expr::binary(BinOp::Lt, e, parse_add());
      else if (match_op(">")) e = Expr::binary(BinOp::Gt, e, parse_add());
      else return e;
    }
  }

  ExprPtr parse_add() {
    ExprPtr e = parse_mul();
    for (;;) {
      if (match_op("+")) e = Expr::binary(BinOp::Add, e, parse_mul());
      else if (match_op("-")) e = Expr::binary(BinOp::Sub, e, parse_mul());
      else return e;
    }
  }

  ExprPtr parse_mul() {
    ExprPtr e = parse_unary();
    while (match_op("*")) e = Expr::binary(BinOp::Mul, e, parse_unary());
    return e;
  }

  ExprPtr parse_unary() {
    if (match_op("!") || match_ident("not")) return Expr::unary(UnOp::Not, parse_unary());
    if (match_op("-")) return Expr::unary(UnOp::Neg, parse_unary());
    return parse_atom();
  }

  ExprPtr parse_atom() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Token::Kind::Int: {
        Token tk = lex_.next();
        return Expr::literal(Value(tk.ival));
      }
      case Token::Kind::Str: {
        Token tk = lex_.next();
        return Expr::literal(Value(tk.text));
      }
      case Token::Kind::Ident: {
        Token tk = lex_.next();
        if (tk.text == "true") return Expr::literal(Value(true));
        if (tk.text == "false") return Expr::literal(Value(false));
        return Expr::variable(tk.text);
      }
      case Token::Kind::Op:
        if (t.text == "(") {
          lex_.next();
          ExprPtr e = parse_or();
          if (!match_op(")"))
            throw ParseError("expected ')' at column " + std::to_string(lex_.peek().col));
          return e;
        }
        break;
      default:
        break;
    }
    throw ParseError("unexpected token '" + t.text + "' at column " + std::to_string(t.col));
  }

  bool match_op(const std::string& s) {
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == s) {
      lex_.next();
      return true;
    }
    return false;
  }

  bool match_ident(const std::string& s) {
    if (lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == s) {
      lex_.next();
      return true;
    }
    return false;
  }

  Lexer lex_;
};

} // namespace detail

inline ExprPtr parse_expr(const std::string& src) {
  detail::ExprParser p(src);
  try {
    return p.parse_full();
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + " in expression '" + src + "'");
  }
}

/// One assignment "target := expr". The target is a raw, possibly dotted,
/// reference; model validation resolves it against its scope.
struct Assignment {
  std::string target;
  ExprPtr rhs;
};

inline Assignment parse_assignment(const std::string& src) {
  auto pos = src.find(":=");
  if (pos == std::string::npos) throw ParseError("expected ':=' in assignment '" + src + "'");
  std::string tgt = src.substr(0, pos);
  // trim
  auto l = tgt.find_first_not_of(" \t");
  auto r = tgt.find_last_not_of(" \t");
  if (l == std::string::npos) throw ParseError("empty target in assignment '" + src + "'");
  tgt = tgt.substr(l, r - l + 1);
  for (char c : tgt)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '\''))
      throw ParseError("bad assignment target '" + tgt + "'");
  return Assignment{tgt, parse_expr(src.substr(pos + 2))};
}

inline std::string assignment_to_string(const Assignment& a) {
  return a.target + " := " + expr_to_string(a.rhs);
}

} // namespace rebip

#endif
