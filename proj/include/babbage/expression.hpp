#pragma once

// Expression engine: immutable ASTs over a declared variable list, a text
// grammar (numbers, variables, + - * / ^, exp/sin/cos/tan/abs, guarded
// piecewise), double and exact-rational evaluation, symbolic substitution,
// symbolic and numeric differentiation, and a register-compiled form for
// grid-scale evaluation. Subtrees are shared; iterated substitution builds
// DAGs, and the compiler memoizes on node identity so evaluation cost stays
// proportional to DAG size.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "babbage/rational.hpp"

namespace babbage {

struct ExprError : std::runtime_error {
  size_t position;  // byte offset into the source text; npos when not textual
  explicit ExprError(const std::string& msg, size_t pos = std::string::npos)
      : std::runtime_error(msg), position(pos) {}
};

// A constant is either an exact rational (every literal the grammar accepts
// is rational) or a floating scalar (programmatic constants such as pi or a
// rotation cosine). The double image is cached for exact constants.
struct Number {
  bool exact = true;
  Rational rat;
  double flt = 0.0;

  static Number of(Rational r) {
    Number n;
    n.exact = true;
    n.flt = to_double(r);
    n.rat = std::move(r);
    return n;
  }
  static Number of_double(double d) {
    Number n;
    n.exact = false;
    n.flt = d;
    return n;
  }
  bool same_as(const Number& o) const {
    if (exact != o.exact) return false;
    if (exact) return rat == o.rat;
    return flt == o.flt || (std::isnan(flt) && std::isnan(o.flt));
  }
};

enum class BinOp { Add, Sub, Mul, Div };
enum class UnOp { Neg, Exp, Sin, Cos, Tan, Abs };
enum class CmpOp { Lt, Le, Gt, Ge };

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct ConstNode {
  Number value;
};
struct VarNode {
  int index;
};
struct BinNode {
  BinOp op;
  ExprPtr lhs, rhs;
};
struct PowNode {
  ExprPtr base;
  int exponent;  // >= 0
};
struct UnNode {
  UnOp op;
  ExprPtr arg;
};
// Guard compares one variable against a constant; the two branches partition
// the guard variable's line by construction.
struct PieceNode {
  int var;
  CmpOp cmp;
  Number threshold;
  ExprPtr if_true, if_false;
};
// Deferred composition: value = outer evaluated at the values of args.
// Produced by substitution when a piecewise guard variable is replaced by a
// non-variable expression; never produced by the parser.
struct CallNode {
  ExprPtr outer;  // expression over args.size() variables
  std::vector<ExprPtr> args;
};

class Expr {
 public:
  using Node =
      std::variant<ConstNode, VarNode, BinNode, PowNode, UnNode, PieceNode, CallNode>;
  explicit Expr(Node n) : node(std::move(n)) {}
  Node node;
};

template <class T>
const T* expr_as(const ExprPtr& e) {
  return std::get_if<T>(&e->node);
}

// ---- node factories ------------------------------------------------------
// Binary/unary factories fold exact-rational constant operands so that the
// two parse routes for a literal like "1/3" (rational literal vs division)
// land on the same node.

inline ExprPtr make_const(Number v) {
  return std::make_shared<Expr>(Expr::Node(ConstNode{std::move(v)}));
}
inline ExprPtr make_const(const Rational& r) { return make_const(Number::of(r)); }
inline ExprPtr make_const(long long v) { return make_const(Number::of(Rational(v))); }
inline ExprPtr make_const_f(double d) { return make_const(Number::of_double(d)); }
inline ExprPtr make_var(int index) {
  return std::make_shared<Expr>(Expr::Node(VarNode{index}));
}

inline const Number* const_value(const ExprPtr& e) {
  if (auto* c = expr_as<ConstNode>(e)) return &c->value;
  return nullptr;
}

inline ExprPtr make_bin(BinOp op, ExprPtr lhs, ExprPtr rhs) {
  const Number* a = const_value(lhs);
  const Number* b = const_value(rhs);
  if (a && b && a->exact && b->exact) {
    switch (op) {
      case BinOp::Add: return make_const(a->rat + b->rat);
      case BinOp::Sub: return make_const(a->rat - b->rat);
      case BinOp::Mul: return make_const(a->rat * b->rat);
      case BinOp::Div:
        if (b->rat == 0) throw ExprError("division by zero in constant expression");
        return make_const(a->rat / b->rat);
    }
  }
  return std::make_shared<Expr>(Expr::Node(BinNode{op, std::move(lhs), std::move(rhs)}));
}

inline ExprPtr make_pow(ExprPtr base, int exponent) {
  if (exponent < 0) throw ExprError("negative exponent not allowed");
  if (const Number* a = const_value(base); a && a->exact)
    return make_const(rat_pow(a->rat, exponent));
  return std::make_shared<Expr>(Expr::Node(PowNode{std::move(base), exponent}));
}

inline ExprPtr make_un(UnOp op, ExprPtr arg) {
  if (op == UnOp::Neg) {
    if (const Number* a = const_value(arg); a && a->exact) return make_const(-a->rat);
  }
  return std::make_shared<Expr>(Expr::Node(UnNode{op, std::move(arg)}));
}

inline ExprPtr make_piece(int var, CmpOp cmp, Number threshold, ExprPtr if_true,
                          ExprPtr if_false) {
  if (!if_true || !if_false) throw ExprError("piecewise branch missing");
  return std::make_shared<Expr>(
      Expr::Node(PieceNode{var, cmp, std::move(threshold), std::move(if_true),
                           std::move(if_false)}));
}

inline ExprPtr make_call(ExprPtr outer, std::vector<ExprPtr> args) {
  return std::make_shared<Expr>(Expr::Node(CallNode{std::move(outer), std::move(args)}));
}

// ---- variable lists and the Expression wrapper ---------------------------

using VarList = std::shared_ptr<const std::vector<std::string>>;

inline VarList make_vars(std::vector<std::string> names) {
  return std::make_shared<const std::vector<std::string>>(std::move(names));
}

class Expression {
 public:
  Expression() = default;
  Expression(ExprPtr root, VarList vars) : root_(std::move(root)), vars_(std::move(vars)) {
    if (!root_ || !vars_) throw ExprError("empty expression");
  }
  const ExprPtr& root() const { return root_; }
  const VarList& vars() const { return vars_; }
  int nvars() const { return static_cast<int>(vars_->size()); }
  bool valid() const { return root_ != nullptr; }

 private:
  ExprPtr root_;
  VarList vars_;
};

// ---- structural equality --------------------------------------------------

inline bool same_ast(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->node.index() != b->node.index()) return false;
  if (auto* ca = expr_as<ConstNode>(a)) {
    return ca->value.same_as(expr_as<ConstNode>(b)->value);
  }
  if (auto* va = expr_as<VarNode>(a)) return va->index == expr_as<VarNode>(b)->index;
  if (auto* ba = expr_as<BinNode>(a)) {
    auto* bb = expr_as<BinNode>(b);
    return ba->op == bb->op && same_ast(ba->lhs, bb->lhs) && same_ast(ba->rhs, bb->rhs);
  }
  if (auto* pa = expr_as<PowNode>(a)) {
    auto* pb = expr_as<PowNode>(b);
    return pa->exponent == pb->exponent && same_ast(pa->base, pb->base);
  }
  if (auto* ua = expr_as<UnNode>(a)) {
    auto* ub = expr_as<UnNode>(b);
    return ua->op == ub->op && same_ast(ua->arg, ub->arg);
  }
  if (auto* qa = expr_as<PieceNode>(a)) {
    auto* qb = expr_as<PieceNode>(b);
    return qa->var == qb->var && qa->cmp == qb->cmp &&
           qa->threshold.same_as(qb->threshold) && same_ast(qa->if_true, qb->if_true) &&
           same_ast(qa->if_false, qb->if_false);
  }
  auto* ka = expr_as<CallNode>(a);
  auto* kb = expr_as<CallNode>(b);
  if (ka->args.size() != kb->args.size()) return false;
  if (!same_ast(ka->outer, kb->outer)) return false;
  for (size_t i = 0; i < ka->args.size(); ++i)
    if (!same_ast(ka->args[i], kb->args[i])) return false;
  return true;
}

inline bool same_ast(const Expression& a, const Expression& b) {
  return *a.vars() == *b.vars() && same_ast(a.root(), b.root());
}

// True if any constant in the tree carries only a floating-point value.
// Exact analysis routes are valid only when this is false.
inline bool has_float_constants(const ExprPtr& e) {
  if (auto* c = expr_as<ConstNode>(e)) return !c->value.exact;
  if (expr_as<VarNode>(e)) return false;
  if (auto* b = expr_as<BinNode>(e))
    return has_float_constants(b->lhs) || has_float_constants(b->rhs);
  if (auto* p = expr_as<PowNode>(e)) return has_float_constants(p->base);
  if (auto* u = expr_as<UnNode>(e)) return has_float_constants(u->arg);
  if (auto* q = expr_as<PieceNode>(e))
    return !q->threshold.exact || has_float_constants(q->if_true) ||
           has_float_constants(q->if_false);
  auto* k = expr_as<CallNode>(e);
  if (has_float_constants(k->outer)) return true;
  for (const ExprPtr& a : k->args)
    if (has_float_constants(a)) return true;
  return false;
}

inline bool has_float_constants(const Expression& e) {
  return has_float_constants(e.root());
}

// ---- evaluation ------------------------------------------------------------

inline bool cmp_holds(CmpOp op, double lhs, double rhs) {
  switch (op) {
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
  }
  return false;
}

inline double pow_int(double base, int exponent) {
  double acc = 1.0, b = base;
  int e = exponent;
  while (e > 0) {
    if (e & 1) acc *= b;
    b *= b;
    e >>= 1;
  }
  return acc;
}

inline double eval_node(const ExprPtr& e, std::span<const double> pt) {
  if (auto* c = expr_as<ConstNode>(e)) return c->value.flt;
  if (auto* v = expr_as<VarNode>(e)) return pt[static_cast<size_t>(v->index)];
  if (auto* b = expr_as<BinNode>(e)) {
    double l = eval_node(b->lhs, pt), r = eval_node(b->rhs, pt);
    switch (b->op) {
      case BinOp::Add: return l + r;
      case BinOp::Sub: return l - r;
      case BinOp::Mul: return l * r;
      case BinOp::Div: return l / r;
    }
  }
  if (auto* p = expr_as<PowNode>(e)) return pow_int(eval_node(p->base, pt), p->exponent);
  if (auto* u = expr_as<UnNode>(e)) {
    double a = eval_node(u->arg, pt);
    switch (u->op) {
      case UnOp::Neg: return -a;
      case UnOp::Exp: return std::exp(a);
      case UnOp::Sin: return std::sin(a);
      case UnOp::Cos: return std::cos(a);
      case UnOp::Tan: return std::tan(a);
      case UnOp::Abs: return std::fabs(a);
    }
  }
  if (auto* q = expr_as<PieceNode>(e)) {
    double g = pt[static_cast<size_t>(q->var)];
    return cmp_holds(q->cmp, g, q->threshold.flt) ? eval_node(q->if_true, pt)
                                                  : eval_node(q->if_false, pt);
  }
  auto* k = expr_as<CallNode>(e);
  std::vector<double> inner(k->args.size());
  for (size_t i = 0; i < k->args.size(); ++i) inner[i] = eval_node(k->args[i], pt);
  return eval_node(k->outer, inner);
}

inline double eval(const Expression& e, std::span<const double> pt) {
  if (pt.size() != static_cast<size_t>(e.nvars()))
    throw ExprError("point dimension does not match variable list");
  return eval_node(e.root(), pt);
}

// Exact-rational evaluation; defined for the rational-closed operations
// (+ - * / ^ neg abs piecewise composition). Transcendental nodes throw.
inline Rational eval_exact_node(const ExprPtr& e, const std::vector<Rational>& pt) {
  if (auto* c = expr_as<ConstNode>(e)) {
    if (!c->value.exact) return Rational(c->value.flt);  // doubles are rationals
    return c->value.rat;
  }
  if (auto* v = expr_as<VarNode>(e)) return pt[static_cast<size_t>(v->index)];
  if (auto* b = expr_as<BinNode>(e)) {
    Rational l = eval_exact_node(b->lhs, pt), r = eval_exact_node(b->rhs, pt);
    switch (b->op) {
      case BinOp::Add: return l + r;
      case BinOp::Sub: return l - r;
      case BinOp::Mul: return l * r;
      case BinOp::Div:
        if (r == 0) throw ExprError("division by zero in exact evaluation");
        return l / r;
    }
  }
  if (auto* p = expr_as<PowNode>(e))
    return rat_pow(eval_exact_node(p->base, pt), p->exponent);
  if (auto* u = expr_as<UnNode>(e)) {
    if (u->op == UnOp::Neg) return -eval_exact_node(u->arg, pt);
    if (u->op == UnOp::Abs) {
      Rational a = eval_exact_node(u->arg, pt);
      return a < 0 ? Rational(-a) : a;
    }
    throw ExprError("transcendental node has no exact evaluation");
  }
  if (auto* q = expr_as<PieceNode>(e)) {
    if (!q->threshold.exact)
      throw ExprError("piecewise threshold is floating; no exact evaluation");
    const Rational& g = pt[static_cast<size_t>(q->var)];
    bool taken = false;
    switch (q->cmp) {
      case CmpOp::Lt: taken = g < q->threshold.rat; break;
      case CmpOp::Le: taken = g <= q->threshold.rat; break;
      case CmpOp::Gt: taken = g > q->threshold.rat; break;
      case CmpOp::Ge: taken = g >= q->threshold.rat; break;
    }
    return eval_exact_node(taken ? q->if_true : q->if_false, pt);
  }
  auto* k = expr_as<CallNode>(e);
  std::vector<Rational> inner(k->args.size());
  for (size_t i = 0; i < k->args.size(); ++i) inner[i] = eval_exact_node(k->args[i], pt);
  return eval_exact_node(k->outer, inner);
}

inline Rational eval_exact(const Expression& e, const std::vector<Rational>& pt) {
  if (pt.size() != static_cast<size_t>(e.nvars()))
    throw ExprError("point dimension does not match variable list");
  return eval_exact_node(e.root(), pt);
}

// ---- parser -----------------------------------------------------------------

namespace detail {

struct Parser {
  std::string_view text;
  size_t pos = 0;
  const std::vector<std::string>& names;

  explicit Parser(std::string_view t, const std::vector<std::string>& n)
      : text(t), names(n) {}

  [[noreturn]] void fail(const std::string& msg, size_t at) { throw ExprError(msg, at); }

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' ||
                                 text[pos] == '\n' || text[pos] == '\r'))
      ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!eat(c)) fail(std::string("expected '") + c + "' " + what, pos);
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

  std::string read_ident() {
    skip_ws();
    size_t start = pos;
    if (pos >= text.size() || !ident_start(text[pos])) fail("expected identifier", pos);
    while (pos < text.size() && ident_char(text[pos])) ++pos;
    return std::string(text.substr(start, pos - start));
  }

  // number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
  Rational read_number() {
    skip_ws();
    size_t start = pos;
    auto digits = [&](const char* what) {
      size_t s = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      if (pos == s) fail(std::string("expected digits in ") + what, pos);
      return std::string(text.substr(s, pos - s));
    };
    std::string intpart = digits("number");
    std::string fracpart;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      fracpart = digits("fraction");
    }
    long long exp10 = 0;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      ++pos;
      bool negexp = false;
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        negexp = text[pos] == '-';
        ++pos;
      }
      std::string ed = digits("exponent");
      if (ed.size() > 6) fail("exponent out of range", start);
      exp10 = std::stoll(ed);
      if (negexp) exp10 = -exp10;
    }
    // accumulate digit by digit: the string constructor would treat a
    // leading zero as an octal prefix
    Integer num = 0;
    for (char c : intpart + fracpart) num = num * 10 + (c - '0');
    long long shift = exp10 - static_cast<long long>(fracpart.size());
    Rational r(num);
    if (shift > 0)
      r *= rat_pow(Rational(10), static_cast<int>(shift));
    else if (shift < 0)
      r /= rat_pow(Rational(10), static_cast<int>(-shift));
    return r;
  }

  int var_index(const std::string& name, size_t at) {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    fail("unknown variable '" + name + "'", at);
  }

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    while (true) {
      char c = peek();
      if (c == '+' || c == '-') {
        ++pos;
        ExprPtr rhs = parse_term();
        lhs = make_bin(c == '+' ? BinOp::Add : BinOp::Sub, std::move(lhs), std::move(rhs));
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_factor();
    while (true) {
      char c = peek();
      if (c == '*' || c == '/') {
        size_t at = pos;
        ++pos;
        ExprPtr rhs = parse_factor();
        try {
          lhs = make_bin(c == '*' ? BinOp::Mul : BinOp::Div, std::move(lhs), std::move(rhs));
        } catch (const ExprError& err) {
          fail(err.what(), at);
        }
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_factor() {
    if (peek() == '-') {
      ++pos;
      return make_un(UnOp::Neg, parse_factor());
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (peek() == '^') {
      ++pos;
      skip_ws();
      size_t at = pos;
      if (pos >= text.size() || text[pos] < '0' || text[pos] > '9')
        fail("exponent must be a non-negative integer literal", at);
      size_t s = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      std::string digits(text.substr(s, pos - s));
      if (digits.size() > 4) fail("exponent out of range", at);
      return make_pow(std::move(base), std::stoi(digits));
    }
    return base;
  }

  Number parse_threshold() {
    skip_ws();
    bool neg = false;
    if (peek() == '-') {
      neg = true;
      ++pos;
    }
    skip_ws();
    if (pos >= text.size() || text[pos] < '0' || text[pos] > '9')
      fail("piecewise threshold must be a number", pos);
    Rational r = read_number();
    skip_ws();
    if (peek() == '/') {
      ++pos;
      skip_ws();
      size_t at = pos;
      if (pos >= text.size() || text[pos] < '0' || text[pos] > '9')
        fail("piecewise threshold must be a number", pos);
      Rational den = read_number();
      if (den == 0) fail("threshold denominator is zero", at);
      r /= den;
    }
    if (neg) r = -r;
    return Number::of(r);
  }

  CmpOp parse_cmp() {
    skip_ws();
    if (pos + 1 < text.size() && text[pos] == '<' && text[pos + 1] == '=') {
      pos += 2;
      return CmpOp::Le;
    }
    if (pos + 1 < text.size() && text[pos] == '>' && text[pos + 1] == '=') {
      pos += 2;
      return CmpOp::Ge;
    }
    if (pos < text.size() && text[pos] == '<') {
      ++pos;
      return CmpOp::Lt;
    }
    if (pos < text.size() && text[pos] == '>') {
      ++pos;
      return CmpOp::Gt;
    }
    fail("expected comparison (<, <=, >, >=)", pos);
  }

  ExprPtr parse_piece() {
    expect('(', "after piece");
    size_t at = pos;
    std::string v = read_ident();
    int vi = var_index(v, at);
    CmpOp cmp = parse_cmp();
    Number thr = parse_threshold();
    expect(':', "after piecewise guard");
    ExprPtr then_branch = parse_expr();
    expect(';', "between piecewise branches");
    size_t kwat = pos;
    std::string kw = read_ident();
    if (kw != "else") fail("expected 'else'", kwat);
    expect(':', "after else");
    ExprPtr else_branch = parse_expr();
    expect(')', "closing piece");
    return make_piece(vi, cmp, std::move(thr), std::move(then_branch),
                      std::move(else_branch));
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of expression", pos);
    char c = text[pos];
    if (c == '(') {
      ++pos;
      ExprPtr e = parse_expr();
      expect(')', "closing parenthesis");
      return e;
    }
    if (c >= '0' && c <= '9') return make_const(read_number());
    if (ident_start(c)) {
      size_t at = pos;
      std::string name = read_ident();
      if (name == "piece") return parse_piece();
      if (peek() == '(') {
        UnOp op;
        if (name == "exp")
          op = UnOp::Exp;
        else if (name == "sin")
          op = UnOp::Sin;
        else if (name == "cos")
          op = UnOp::Cos;
        else if (name == "tan")
          op = UnOp::Tan;
        else if (name == "abs")
          op = UnOp::Abs;
        else
          fail("unknown function '" + name + "'", at);
        ++pos;  // '('
        ExprPtr arg = parse_expr();
        expect(')', "closing function call");
        return make_un(op, std::move(arg));
      }
      return make_var(var_index(name, at));
    }
    fail(std::string("unexpected character '") + c + "'", pos);
  }
};

}  // namespace detail

inline Expression parse_expression(std::string_view text, VarList vars) {
  detail::Parser p(text, *vars);
  ExprPtr root = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input after expression", p.pos);
  return Expression(std::move(root), std::move(vars));
}

// ---- printer ----------------------------------------------------------------
// Canonical text form. For every AST the parser can produce,
// parse(print(parse(s))) == parse(s) structurally.

namespace detail {

enum class Prec { Add = 0, Mul = 1, Unary = 2, Pow = 3, Atom = 4 };

inline Prec node_prec(const ExprPtr& e) {
  if (auto* c = expr_as<ConstNode>(e)) {
    const Number& n = c->value;
    if (n.exact) {
      if (n.rat < 0) return Prec::Unary;              // prints with leading '-'
      if (denominator(n.rat) != 1) return Prec::Mul;  // prints as a division
      return Prec::Atom;
    }
    return n.flt < 0 ? Prec::Unary : Prec::Atom;
  }
  if (expr_as<VarNode>(e)) return Prec::Atom;
  if (auto* b = expr_as<BinNode>(e))
    return (b->op == BinOp::Add || b->op == BinOp::Sub) ? Prec::Add : Prec::Mul;
  if (expr_as<PowNode>(e)) return Prec::Pow;
  if (auto* u = expr_as<UnNode>(e)) return u->op == UnOp::Neg ? Prec::Unary : Prec::Atom;
  return Prec::Atom;  // piece(...), call(...)
}

inline std::string format_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

inline std::string cmp_text(CmpOp c) {
  switch (c) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

inline std::string number_text(const Number& n) {
  return n.exact ? rational_to_string(n.rat) : format_double(n.flt);
}

inline void print_node(const ExprPtr& e, const std::vector<std::string>& names,
                       std::string& out);

inline void print_child(const ExprPtr& e, const std::vector<std::string>& names,
                        std::string& out, Prec min_prec) {
  bool parens = static_cast<int>(node_prec(e)) < static_cast<int>(min_prec);
  if (parens) out += '(';
  print_node(e, names, out);
  if (parens) out += ')';
}

inline void print_node(const ExprPtr& e, const std::vector<std::string>& names,
                       std::string& out) {
  if (auto* c = expr_as<ConstNode>(e)) {
    out += number_text(c->value);
    return;
  }
  if (auto* v = expr_as<VarNode>(e)) {
    out += names[static_cast<size_t>(v->index)];
    return;
  }
  if (auto* b = expr_as<BinNode>(e)) {
    switch (b->op) {
      case BinOp::Add:
        print_child(b->lhs, names, out, Prec::Add);
        out += " + ";
        print_child(b->rhs, names, out, Prec::Mul);
        return;
      case BinOp::Sub:
        print_child(b->lhs, names, out, Prec::Add);
        out += " - ";
        print_child(b->rhs, names, out, Prec::Mul);
        return;
      case BinOp::Mul:
        print_child(b->lhs, names, out, Prec::Mul);
        out += " * ";
        print_child(b->rhs, names, out, Prec::Unary);
        return;
      case BinOp::Div:
        print_child(b->lhs, names, out, Prec::Mul);
        out += " / ";
        print_child(b->rhs, names, out, Prec::Unary);
        return;
    }
  }
  if (auto* p = expr_as<PowNode>(e)) {
    print_child(p->base, names, out, Prec::Atom);
    out += '^';
    out += std::to_string(p->exponent);
    return;
  }
  if (auto* u = expr_as<UnNode>(e)) {
    switch (u->op) {
      case UnOp::Neg:
        out += '-';
        print_child(u->arg, names, out, Prec::Unary);
        return;
      case UnOp::Exp: out += "exp("; break;
      case UnOp::Sin: out += "sin("; break;
      case UnOp::Cos: out += "cos("; break;
      case UnOp::Tan: out += "tan("; break;
      case UnOp::Abs: out += "abs("; break;
    }
    print_node(u->arg, names, out);
    out += ')';
    return;
  }
  if (auto* q = expr_as<PieceNode>(e)) {
    out += "piece(";
    out += names[static_cast<size_t>(q->var)];
    out += ' ';
    out += cmp_text(q->cmp);
    out += ' ';
    out += number_text(q->threshold);
    out += " : ";
    print_node(q->if_true, names, out);
    out += " ; else : ";
    print_node(q->if_false, names, out);
    out += ')';
    return;
  }
  // Deferred composition has no surface syntax; this form is for diagnostics
  // only and deliberately does not reparse.
  auto* k = expr_as<CallNode>(e);
  out += "«compose»[";
  std::vector<std::string> inner_names(k->args.size());
  for (size_t i = 0; i < k->args.size(); ++i) inner_names[i] = "$" + std::to_string(i);
  print_node(k->outer, inner_names, out);
  out += " with";
  for (size_t i = 0; i < k->args.size(); ++i) {
    out += " $" + std::to_string(i) + "=";
    print_node(k->args[i], names, out);
    if (i + 1 < k->args.size()) out += ',';
  }
  out += ']';
}

}  // namespace detail

inline std::string print_expression(const Expression& e) {
  std::string out;
  detail::print_node(e.root(), *e.vars(), out);
  return out;
}

// ---- substitution / composition ----------------------------------------------

namespace detail {

using SubstMemo = std::unordered_map<const Expr*, ExprPtr>;

inline ExprPtr substitute_node(const ExprPtr& e, const std::vector<ExprPtr>& repl,
                               SubstMemo& memo) {
  if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
  ExprPtr out;
  if (expr_as<ConstNode>(e)) {
    out = e;
  } else if (auto* v = expr_as<VarNode>(e)) {
    out = repl[static_cast<size_t>(v->index)];
  } else if (auto* b = expr_as<BinNode>(e)) {
    out = make_bin(b->op, substitute_node(b->lhs, repl, memo),
                   substitute_node(b->rhs, repl, memo));
  } else if (auto* p = expr_as<PowNode>(e)) {
    out = make_pow(substitute_node(p->base, repl, memo), p->exponent);
  } else if (auto* u = expr_as<UnNode>(e)) {
    out = make_un(u->op, substitute_node(u->arg, repl, memo));
  } else if (auto* q = expr_as<PieceNode>(e)) {
    const ExprPtr& guard_repl = repl[static_cast<size_t>(q->var)];
    if (auto* gv = expr_as<VarNode>(guard_repl)) {
      out = make_piece(gv->index, q->cmp, q->threshold,
                       substitute_node(q->if_true, repl, memo),
                       substitute_node(q->if_false, repl, memo));
    } else {
      // The guard no longer compares a plain variable; defer the composition.
      out = make_call(e, repl);
    }
  } else {
    auto* k = expr_as<CallNode>(e);
    std::vector<ExprPtr> args;
    args.reserve(k->args.size());
    for (const ExprPtr& a : k->args) args.push_back(substitute_node(a, repl, memo));
    out = make_call(k->outer, std::move(args));
  }
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

// outer(inners[0], ..., inners[m-1]); all inners share one variable list.
inline Expression compose(const Expression& outer, const std::vector<Expression>& inners) {
  if (inners.empty()) throw ExprError("compose needs at least one inner expression");
  if (static_cast<size_t>(outer.nvars()) != inners.size())
    throw ExprError("compose arity mismatch");
  const VarList& ambient = inners.front().vars();
  std::vector<ExprPtr> repl;
  repl.reserve(inners.size());
  for (const Expression& g : inners) {
    if (g.vars() != ambient && *g.vars() != *ambient)
      throw ExprError("inner expressions must share a variable list");
    repl.push_back(g.root());
  }
  detail::SubstMemo memo;
  return Expression(detail::substitute_node(outer.root(), repl, memo), ambient);
}

// ---- symbolic differentiation --------------------------------------------------

namespace detail {

inline bool is_zero_const(const ExprPtr& e) {
  const Number* n = const_value(e);
  return n && ((n->exact && n->rat == 0) || (!n->exact && n->flt == 0.0));
}
inline bool is_one_const(const ExprPtr& e) {
  const Number* n = const_value(e);
  return n && ((n->exact && n->rat == 1) || (!n->exact && n->flt == 1.0));
}

// Simplifying combinators for derivative construction only; the parser never
// uses these, so parsed structure is preserved elsewhere.
inline ExprPtr dadd(ExprPtr a, ExprPtr b) {
  if (is_zero_const(a)) return b;
  if (is_zero_const(b)) return a;
  return make_bin(BinOp::Add, std::move(a), std::move(b));
}
inline ExprPtr dsub(ExprPtr a, ExprPtr b) {
  if (is_zero_const(b)) return a;
  if (is_zero_const(a)) return make_un(UnOp::Neg, std::move(b));
  return make_bin(BinOp::Sub, std::move(a), std::move(b));
}
inline ExprPtr dmul(ExprPtr a, ExprPtr b) {
  if (is_zero_const(a) || is_zero_const(b)) return make_const(0LL);
  if (is_one_const(a)) return b;
  if (is_one_const(b)) return a;
  return make_bin(BinOp::Mul, std::move(a), std::move(b));
}

inline ExprPtr derivative_node(const ExprPtr& e, int axis, SubstMemo& memo) {
  if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
  ExprPtr out;
  if (expr_as<ConstNode>(e)) {
    out = make_const(0LL);
  } else if (auto* v = expr_as<VarNode>(e)) {
    out = make_const(v->index == axis ? 1LL : 0LL);
  } else if (auto* b = expr_as<BinNode>(e)) {
    ExprPtr dl = derivative_node(b->lhs, axis, memo);
    ExprPtr dr = derivative_node(b->rhs, axis, memo);
    switch (b->op) {
      case BinOp::Add: out = dadd(dl, dr); break;
      case BinOp::Sub: out = dsub(dl, dr); break;
      case BinOp::Mul: out = dadd(dmul(dl, b->rhs), dmul(b->lhs, dr)); break;
      case BinOp::Div:
        out = make_bin(BinOp::Div, dsub(dmul(dl, b->rhs), dmul(b->lhs, dr)),
                       make_pow(b->rhs, 2));
        break;
    }
  } else if (auto* p = expr_as<PowNode>(e)) {
    if (p->exponent == 0) {
      out = make_const(0LL);
    } else {
      ExprPtr db = derivative_node(p->base, axis, memo);
      out = dmul(dmul(make_const(static_cast<long long>(p->exponent)),
                      make_pow(p->base, p->exponent - 1)),
                 db);
    }
  } else if (auto* u = expr_as<UnNode>(e)) {
    ExprPtr da = derivative_node(u->arg, axis, memo);
    switch (u->op) {
      case UnOp::Neg: out = make_un(UnOp::Neg, da); break;
      case UnOp::Exp: out = dmul(make_un(UnOp::Exp, u->arg), da); break;
      case UnOp::Sin: out = dmul(make_un(UnOp::Cos, u->arg), da); break;
      case UnOp::Cos: out = make_un(UnOp::Neg, dmul(make_un(UnOp::Sin, u->arg), da)); break;
      case UnOp::Tan:
        out = dmul(dadd(make_const(1LL), make_pow(make_un(UnOp::Tan, u->arg), 2)), da);
        break;
      case UnOp::Abs:
        throw ExprError("abs is not symbolically differentiable; use numeric mode");
    }
  } else if (expr_as<PieceNode>(e)) {
    throw ExprError("piecewise is not symbolically differentiable; use numeric mode");
  } else {
    auto* k = expr_as<CallNode>(e);
    SubstMemo outer_memo;
    ExprPtr total = make_const(0LL);
    for (size_t i = 0; i < k->args.size(); ++i) {
      ExprPtr douter = derivative_node(k->outer, static_cast<int>(i), outer_memo);
      if (is_zero_const(douter)) continue;
      ExprPtr darg = derivative_node(k->args[i], axis, memo);
      if (is_zero_const(darg)) continue;
      total = dadd(total, dmul(make_call(douter, k->args), darg));
    }
    out = total;
  }
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

inline Expression derivative(const Expression& e, int axis) {
  if (axis < 0 || axis >= e.nvars()) throw ExprError("derivative axis out of range");
  detail::SubstMemo memo;
  return Expression(detail::derivative_node(e.root(), axis, memo), e.vars());
}

inline std::vector<Expression> grad_symbolic(const Expression& e) {
  std::vector<Expression> g;
  g.reserve(static_cast<size_t>(e.nvars()));
  for (int i = 0; i < e.nvars(); ++i) g.push_back(derivative(e, i));
  return g;
}

// Central differences; the default step matches the documented contract.
inline std::function<std::vector<double>(std::span<const double>)> grad_numeric(
    const Expression& e, double step = 1e-5) {
  return [e, step](std::span<const double> pt) {
    std::vector<double> x(pt.begin(), pt.end());
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
      double saved = x[i];
      x[i] = saved + step;
      double hi = eval(e, x);
      x[i] = saved - step;
      double lo = eval(e, x);
      x[i] = saved;
      g[i] = (hi - lo) / (2.0 * step);
    }
    return g;
  };
}

// ---- compiled evaluation --------------------------------------------------------
// Register program memoized on node identity: shared subtrees (including the
// DAGs produced by iterated substitution) are evaluated once per call.
// Piecewise branches are both computed and then selected, which is safe for
// IEEE values and keeps the program branch-free.

class CompiledMap {
 public:
  explicit CompiledMap(const std::vector<Expression>& comps) {
    if (comps.empty()) throw ExprError("cannot compile an empty component list");
    nvars_ = comps.front().nvars();
    Builder b(*this);
    for (const Expression& c : comps) {
      if (c.nvars() != nvars_) throw ExprError("components disagree on variable list");
      outputs_.push_back(b.emit(c.root()));
    }
    nregs_ = b.next_reg;
    scratch_.resize(nregs_);
  }

  int dim_in() const { return nvars_; }
  int dim_out() const { return static_cast<int>(outputs_.size()); }

  void eval(std::span<const double> pt, std::span<double> out) const {
    run(pt, scratch_);
    for (size_t i = 0; i < outputs_.size(); ++i) out[i] = scratch_[outputs_[i]];
  }

  std::vector<double> eval(std::span<const double> pt) const {
    std::vector<double> out(outputs_.size());
    eval(pt, out);
    return out;
  }

 private:
  enum class OpK : uint8_t { Const, Var, Bin, PowI, Un, Select, Call };
  struct Op {
    OpK k;
    uint8_t code = 0;  // BinOp / UnOp / CmpOp discriminant
    uint32_t dst = 0, a = 0, b = 0, c = 0;
    double imm = 0.0;
    int sub = -1;  // call-site index
  };
  struct CallSite {
    std::shared_ptr<const CompiledMap> target;  // single-output program
    std::vector<uint32_t> arg_regs;
  };

  struct Builder {
    CompiledMap& m;
    std::unordered_map<const Expr*, uint32_t> reg_of;
    std::unordered_map<int, uint32_t> var_reg;
    uint32_t next_reg = 0;
    explicit Builder(CompiledMap& mm) : m(mm) {}

    uint32_t fresh() { return next_reg++; }

    uint32_t emit_var(int index) {
      if (auto it = var_reg.find(index); it != var_reg.end()) return it->second;
      uint32_t r = fresh();
      m.ops_.push_back({OpK::Var, 0, r, static_cast<uint32_t>(index), 0, 0, 0.0, -1});
      var_reg.emplace(index, r);
      return r;
    }

    uint32_t emit(const ExprPtr& e) {
      if (auto it = reg_of.find(e.get()); it != reg_of.end()) return it->second;
      uint32_t r;
      if (auto* cn = expr_as<ConstNode>(e)) {
        r = fresh();
        m.ops_.push_back({OpK::Const, 0, r, 0, 0, 0, cn->value.flt, -1});
      } else if (auto* v = expr_as<VarNode>(e)) {
        r = emit_var(v->index);
      } else if (auto* bn = expr_as<BinNode>(e)) {
        uint32_t a = emit(bn->lhs), b = emit(bn->rhs);
        r = fresh();
        m.ops_.push_back(
            {OpK::Bin, static_cast<uint8_t>(bn->op), r, a, b, 0, 0.0, -1});
      } else if (auto* pn = expr_as<PowNode>(e)) {
        uint32_t a = emit(pn->base);
        r = fresh();
        m.ops_.push_back({OpK::PowI, 0, r, a, static_cast<uint32_t>(pn->exponent), 0,
                          0.0, -1});
      } else if (auto* un = expr_as<UnNode>(e)) {
        uint32_t a = emit(un->arg);
        r = fresh();
        m.ops_.push_back({OpK::Un, static_cast<uint8_t>(un->op), r, a, 0, 0, 0.0, -1});
      } else if (auto* q = expr_as<PieceNode>(e)) {
        // op.a holds the guard variable index (read from the input point).
        uint32_t t = emit(q->if_true), f = emit(q->if_false);
        r = fresh();
        m.ops_.push_back({OpK::Select, static_cast<uint8_t>(q->cmp), r,
                          static_cast<uint32_t>(q->var), t, f, q->threshold.flt, -1});
      } else {
        auto* k = expr_as<CallNode>(e);
        CallSite site;
        site.arg_regs.reserve(k->args.size());
        for (const ExprPtr& a : k->args) site.arg_regs.push_back(emit(a));
        site.target = m.subprogram(k->outer, k->args.size());
        int sub = static_cast<int>(m.call_sites_.size());
        m.call_sites_.push_back(std::move(site));
        r = fresh();
        m.ops_.push_back({OpK::Call, 0, r, 0, 0, 0, 0.0, sub});
      }
      reg_of.emplace(e.get(), r);
      return r;
    }
  };

  std::shared_ptr<const CompiledMap> subprogram(const ExprPtr& outer, size_t arity) {
    if (auto it = sub_cache_.find(outer.get()); it != sub_cache_.end()) return it->second;
    auto names = std::make_shared<const std::vector<std::string>>(
        std::vector<std::string>(arity, "_"));
    auto sub = std::make_shared<CompiledMap>(
        std::vector<Expression>{Expression(outer, names)});
    sub_cache_.emplace(outer.get(), sub);
    return sub;
  }

  void run(std::span<const double> pt, std::vector<double>& regs) const {
    if (regs.size() < nregs_) regs.resize(nregs_);
    for (const Op& op : ops_) {
      switch (op.k) {
        case OpK::Const: regs[op.dst] = op.imm; break;
        case OpK::Var: regs[op.dst] = pt[op.a]; break;
        case OpK::Bin: {
          double l = regs[op.a], r = regs[op.b];
          switch (static_cast<BinOp>(op.code)) {
            case BinOp::Add: regs[op.dst] = l + r; break;
            case BinOp::Sub: regs[op.dst] = l - r; break;
            case BinOp::Mul: regs[op.dst] = l * r; break;
            case BinOp::Div: regs[op.dst] = l / r; break;
          }
          break;
        }
        case OpK::PowI: regs[op.dst] = pow_int(regs[op.a], static_cast<int>(op.b)); break;
        case OpK::Un: {
          double a = regs[op.a];
          switch (static_cast<UnOp>(op.code)) {
            case UnOp::Neg: regs[op.dst] = -a; break;
            case UnOp::Exp: regs[op.dst] = std::exp(a); break;
            case UnOp::Sin: regs[op.dst] = std::sin(a); break;
            case UnOp::Cos: regs[op.dst] = std::cos(a); break;
            case UnOp::Tan: regs[op.dst] = std::tan(a); break;
            case UnOp::Abs: regs[op.dst] = std::fabs(a); break;
          }
          break;
        }
        case OpK::Select:
          regs[op.dst] = cmp_holds(static_cast<CmpOp>(op.code), pt[op.a], op.imm)
                             ? regs[op.b]
                             : regs[op.c];
          break;
        case OpK::Call: {
          const CallSite& site = call_sites_[static_cast<size_t>(op.sub)];
          std::vector<double> inner(site.arg_regs.size());
          for (size_t i = 0; i < inner.size(); ++i) inner[i] = regs[site.arg_regs[i]];
          double v;
          site.target->eval(inner, std::span<double>(&v, 1));
          regs[op.dst] = v;
          break;
        }
      }
    }
  }

  int nvars_ = 0;
  size_t nregs_ = 0;
  std::vector<Op> ops_;
  std::vector<uint32_t> outputs_;
  std::vector<CallSite> call_sites_;
  std::unordered_map<const Expr*, std::shared_ptr<const CompiledMap>> sub_cache_;
  mutable std::vector<double> scratch_;
};

}  // namespace babbage
