#pragma once

// Canonical multivariate polynomials over exact rationals: a sorted map from
// exponent vectors to nonzero coefficients. Two expressions denote the same
// polynomial function iff their canonical forms compare equal, which is what
// the exact mode of every checker relies on.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "babbage/expression.hpp"
#include "babbage/rational.hpp"

namespace babbage {

// Iterated composition doubles degrees; beyond this cap exact mode refuses
// and callers fall back to sampled comparison.
inline constexpr int kDegreeCap = 64;

struct DegreeCapError : std::runtime_error {
  int degree;
  explicit DegreeCapError(int deg)
      : std::runtime_error("composed degree " + std::to_string(deg) +
                           " exceeds the exact-mode cap of " +
                           std::to_string(kDegreeCap)),
        degree(deg) {}
};

class Polynomial {
 public:
  using Exponents = std::vector<uint32_t>;
  using Terms = std::map<Exponents, Rational>;

  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(const Rational& c, int nvars) {
    Polynomial p(nvars);
    if (c != 0) p.terms_.emplace(Exponents(static_cast<size_t>(nvars), 0), c);
    return p;
  }
  static Polynomial variable(int index, int nvars) {
    Polynomial p(nvars);
    Exponents e(static_cast<size_t>(nvars), 0);
    e[static_cast<size_t>(index)] = 1;
    p.terms_.emplace(std::move(e), Rational(1));
    return p;
  }

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  const Terms& terms() const { return terms_; }

  bool is_constant() const {
    if (terms_.empty()) return true;
    return terms_.size() == 1 && term_degree(terms_.begin()->first) == 0;
  }
  Rational constant_value() const {
    if (terms_.empty()) return Rational(0);
    return terms_.begin()->second;
  }

  int total_degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, term_degree(e));
    return d;
  }

  // Degree in one variable.
  int degree_in(int axis) const {
    int d = 0;
    for (const auto& [e, c] : terms_)
      d = std::max(d, static_cast<int>(e[static_cast<size_t>(axis)]));
    return d;
  }

  Rational coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    a.check_same(b);
    Polynomial r = a;
    for (const auto& [e, c] : b.terms_) r.add_term(e, c);
    return r;
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    a.check_same(b);
    Polynomial r = a;
    for (const auto& [e, c] : b.terms_) r.add_term(e, -c);
    return r;
  }
  friend Polynomial operator-(const Polynomial& a) {
    Polynomial r(a.nvars_);
    for (const auto& [e, c] : a.terms_) r.terms_.emplace(e, -c);
    return r;
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_same(b);
    Polynomial r(a.nvars_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e(ea.size());
        for (size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        r.add_term(e, ca * cb);
      }
    }
    return r;
  }
  friend Polynomial operator*(const Rational& c, const Polynomial& a) {
    Polynomial r(a.nvars_);
    if (c == 0) return r;
    for (const auto& [e, k] : a.terms_) r.terms_.emplace(e, c * k);
    return r;
  }

  Polynomial pow(int exponent) const {
    if (exponent < 0) throw ExprError("negative polynomial power");
    Polynomial acc = constant(Rational(1), nvars_);
    Polynomial base = *this;
    int e = exponent;
    while (e > 0) {
      if (e & 1) acc = acc * base;
      base = (e >>= 1) > 0 ? base * base : base;
    }
    return acc;
  }

  bool operator==(const Polynomial& o) const {
    return nvars_ == o.nvars_ && terms_ == o.terms_;
  }
  bool operator!=(const Polynomial& o) const { return !(*this == o); }

  // Substitute args[i] for variable i. All args share a variable count.
  // Throws DegreeCapError when the bound on the composed degree exceeds the cap.
  Polynomial compose(const std::vector<Polynomial>& args) const {
    if (args.size() != static_cast<size_t>(nvars_))
      throw ExprError("polynomial compose arity mismatch");
    int ambient = args.empty() ? 0 : args.front().nvars();
    for (const Polynomial& a : args)
      if (a.nvars() != ambient) throw ExprError("compose arguments disagree on arity");

    int bound = 0;
    for (const auto& [e, c] : terms_) {
      long long d = 0;
      for (size_t i = 0; i < e.size(); ++i)
        d += static_cast<long long>(e[i]) * args[i].total_degree();
      bound = std::max(bound, static_cast<int>(std::min<long long>(d, 1 << 20)));
    }
    if (bound > kDegreeCap) throw DegreeCapError(bound);

    // Cache powers of each argument as needed.
    std::vector<std::vector<Polynomial>> powers(args.size());
    auto arg_power = [&](size_t i, uint32_t e) -> const Polynomial& {
      auto& cache = powers[i];
      if (cache.empty()) cache.push_back(constant(Rational(1), ambient));
      while (cache.size() <= e) cache.push_back(cache.back() * args[i]);
      return cache[e];
    };

    Polynomial out(ambient);
    for (const auto& [e, c] : terms_) {
      Polynomial term = constant(c, ambient);
      for (size_t i = 0; i < e.size(); ++i)
        if (e[i] > 0) term = term * arg_power(i, e[i]);
      out = out + term;
    }
    return out;
  }

  Polynomial derivative(int axis) const {
    Polynomial r(nvars_);
    for (const auto& [e, c] : terms_) {
      uint32_t k = e[static_cast<size_t>(axis)];
      if (k == 0) continue;
      Exponents d = e;
      d[static_cast<size_t>(axis)] = k - 1;
      r.add_term(d, c * Rational(k));
    }
    return r;
  }

  double eval(std::span<const double> pt) const {
    double acc = 0.0;
    for (const auto& [e, c] : terms_) {
      double t = to_double(c);
      for (size_t i = 0; i < e.size(); ++i)
        if (e[i] > 0) t *= pow_int(pt[i], static_cast<int>(e[i]));
      acc += t;
    }
    return acc;
  }

  Rational eval_exact(const std::vector<Rational>& pt) const {
    Rational acc(0);
    for (const auto& [e, c] : terms_) {
      Rational t = c;
      for (size_t i = 0; i < e.size(); ++i)
        if (e[i] > 0) t *= rat_pow(pt[i], static_cast<int>(e[i]));
      acc += t;
    }
    return acc;
  }

  // Canonical expression form: terms in the map's exponent order.
  Expression to_expression(VarList vars) const {
    if (vars->size() != static_cast<size_t>(nvars_))
      throw ExprError("variable list does not match polynomial arity");
    if (terms_.empty()) return Expression(make_const(0LL), vars);
    ExprPtr acc;
    for (const auto& [e, c] : terms_) {
      ExprPtr term;
      bool coeff_is_one = (c == 1) && term_degree(e) > 0;
      if (!coeff_is_one) term = make_const(c);
      for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        ExprPtr v = e[i] == 1 ? make_var(static_cast<int>(i))
                              : make_pow(make_var(static_cast<int>(i)),
                                         static_cast<int>(e[i]));
        term = term ? make_bin(BinOp::Mul, std::move(term), std::move(v)) : v;
      }
      acc = acc ? make_bin(BinOp::Add, std::move(acc), std::move(term)) : term;
    }
    return Expression(std::move(acc), std::move(vars));
  }

 private:
  void check_same(const Polynomial& o) const {
    if (nvars_ != o.nvars_) throw ExprError("polynomial arity mismatch");
  }
  static int term_degree(const Exponents& e) {
    int d = 0;
    for (uint32_t k : e) d += static_cast<int>(k);
    return d;
  }
  void add_term(const Exponents& e, const Rational& c) {
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (c != 0) terms_.emplace(e, c);
      return;
    }
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }

  int nvars_;
  Terms terms_;
};

namespace detail {

inline Polynomial poly_of_node(const ExprPtr& e, int nvars,
                               std::unordered_map<const Expr*, Polynomial>& memo) {
  if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
  Polynomial out(nvars);
  if (auto* c = expr_as<ConstNode>(e)) {
    // A double is an exact dyadic rational, so floating constants stay exact.
    Rational r = c->value.exact ? c->value.rat : Rational(c->value.flt);
    out = Polynomial::constant(r, nvars);
  } else if (auto* v = expr_as<VarNode>(e)) {
    out = Polynomial::variable(v->index, nvars);
  } else if (auto* b = expr_as<BinNode>(e)) {
    Polynomial l = poly_of_node(b->lhs, nvars, memo);
    Polynomial r = poly_of_node(b->rhs, nvars, memo);
    switch (b->op) {
      case BinOp::Add: out = l + r; break;
      case BinOp::Sub: out = l - r; break;
      case BinOp::Mul: out = l * r; break;
      case BinOp::Div:
        if (!r.is_constant())
          throw ExprError("division by a non-constant is not polynomial");
        if (r.constant_value() == 0) throw ExprError("division by zero");
        out = (Rational(1) / r.constant_value()) * l;
        break;
    }
  } else if (auto* p = expr_as<PowNode>(e)) {
    out = poly_of_node(p->base, nvars, memo).pow(p->exponent);
  } else if (auto* u = expr_as<UnNode>(e)) {
    if (u->op != UnOp::Neg)
      throw ExprError("transcendental or absolute-value node is not polynomial");
    out = -poly_of_node(u->arg, nvars, memo);
  } else if (expr_as<PieceNode>(e)) {
    throw ExprError("piecewise node is not polynomial");
  } else {
    auto* k = expr_as<CallNode>(e);
    std::unordered_map<const Expr*, Polynomial> outer_memo;
    Polynomial outer =
        poly_of_node(k->outer, static_cast<int>(k->args.size()), outer_memo);
    std::vector<Polynomial> args;
    args.reserve(k->args.size());
    for (const ExprPtr& a : k->args) args.push_back(poly_of_node(a, nvars, memo));
    out = outer.compose(args);
  }
  memo.emplace(e.get(), out);
  return out;
}

}  // namespace detail

// Canonical form of a polynomial expression; throws ExprError on
// non-polynomial nodes and DegreeCapError past the composition cap.
inline Polynomial poly_canonical(const Expression& e) {
  std::unordered_map<const Expr*, Polynomial> memo;
  return detail::poly_of_node(e.root(), e.nvars(), memo);
}

inline bool is_polynomial(const Expression& e) {
  try {
    (void)poly_canonical(e);
    return true;
  } catch (const DegreeCapError&) {
    return false;
  } catch (const ExprError&) {
    return false;
  }
}

}  // namespace babbage
