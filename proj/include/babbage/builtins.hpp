#pragma once

// Builtin map families, addressable as "builtin:<family>?<key>=<value>&...".
//
//   f_lambda_cont?bits=1101    1D continuous idempotent map; the identity on
//                              [0,1], digit values at integers >= 2, line or
//                              parabola interpolation in between.
//   f_lambda_smooth?bits=1101  C-infinity variant: zero plateau on [-1,0], a
//                              strictly increasing flat tail to -1 on the
//                              left, minus-digit values at positive integers,
//                              smoothstep transitions.
//   poly_family?i=2            (x * prod_{j=1..i} (j - y)/j, 0), normalized
//                              so the first component restricts to x on y=0.
//   exp_collapse               (0 for x <= 0, -exp(-1/x) otherwise, 0): its
//                              square is constant, cube equals square.
//   hw_simple?k=3              one-generation offspring genotype map on the
//                              k-allele genotype simplex coordinates.
//   hw_sexed?k=2               two-sex variant on E x E; satisfies f^3 = f^2
//                              but not f^2 = f.
//   jordan?blocks=1,-1,rot:1/6,nil:2   block-diagonal linear map.
//   rot_refl?angle=1/6 | rot_refl?reflect=1   planar rotation / reflection.

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "babbage/map_spec.hpp"

namespace babbage {

struct BuiltinError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline ExprPtr rc(long long num, long long den = 1) {
  return make_const(Rational(num, den));
}

// exp(-1/u) for an expression u; zero limit from the right is the IEEE value.
inline ExprPtr sigma_of(const ExprPtr& u) {
  return make_un(UnOp::Exp, make_un(UnOp::Neg, make_bin(BinOp::Div, rc(1), u)));
}

// Smoothstep sigma(t) / (sigma(t) + sigma(1-t)) for an expression t that
// stays in [0, 1] wherever the enclosing guard admits it.
inline ExprPtr smoothstep_of(const ExprPtr& t) {
  ExprPtr st = sigma_of(t);
  ExprPtr s1t = sigma_of(make_bin(BinOp::Sub, rc(1), t));
  return make_bin(BinOp::Div, st, make_bin(BinOp::Add, st, s1t));
}

inline std::vector<int> parse_bits(const std::string& bits) {
  if (bits.empty()) throw BuiltinError("bits must be a nonempty string of 0s and 1s");
  std::vector<int> out;
  out.reserve(bits.size());
  for (char c : bits) {
    if (c != '0' && c != '1')
      throw BuiltinError("bits must contain only 0 and 1, got '" + bits + "'");
    out.push_back(c - '0');
  }
  return out;
}

}  // namespace detail

// ---- 1D digit-encoding families -------------------------------------------

// Continuous idempotent self-map of R encoding a binary digit string: zero on
// (-inf, 0], identity on [0, 1], value digit(m) at x = m + 1 for m >= 1,
// straight lines between differing neighbor values and height-1/2 parabola
// bumps between equal ones, constant after the last digit.
inline MapSpec make_f_lambda_cont(const std::string& bits) {
  std::vector<int> d = detail::parse_bits(bits);
  const int B = static_cast<int>(d.size());
  VarList vars = make_vars({"x"});
  ExprPtr x = make_var(0);

  // Node values at integer arguments 1..B+1.
  std::vector<long long> val(static_cast<size_t>(B) + 2, 0);
  val[1] = 1;
  for (int m = 1; m <= B; ++m) val[static_cast<size_t>(m) + 1] = d[static_cast<size_t>(m) - 1];

  using detail::rc;
  // Build the else-chain from the right: x > B+1 is constant val(B+1).
  ExprPtr chain = rc(val[static_cast<size_t>(B) + 1]);
  for (int j = B; j >= 1; --j) {
    long long lo = val[static_cast<size_t>(j)], hi = val[static_cast<size_t>(j) + 1];
    ExprPtr seg;
    ExprPtr xm = make_bin(BinOp::Sub, x, rc(j));
    if (lo != hi) {
      // line from (j, lo) to (j+1, hi)
      seg = make_bin(BinOp::Add, rc(lo), make_bin(BinOp::Mul, rc(hi - lo), xm));
    } else {
      // parabola through (j, lo), (j+1, lo) with vertex value 1/2
      ExprPtr bump = make_bin(BinOp::Mul, xm, make_bin(BinOp::Sub, rc(j + 1), x));
      seg = make_bin(BinOp::Add, rc(lo),
                     make_bin(BinOp::Mul, make_const(Rational(4) * (Rational(1, 2) - lo)),
                              bump));
    }
    chain = make_piece(0, CmpOp::Le, Number::of(Rational(j + 1)), seg, chain);
  }
  chain = make_piece(0, CmpOp::Le, Number::of(Rational(1)), x, chain);
  chain = make_piece(0, CmpOp::Le, Number::of(Rational(0)), rc(0), chain);

  Window w = Window::cube(-2.0, static_cast<double>(B) + 3.0, 1);
  return MapSpec(vars, {Expression(chain, vars)}, w, "builtin:f_lambda_cont?bits=" + bits);
}

// Smooth companion: -exp(1/(x+1)) on (-inf,-1) rising flat to the plateau,
// zero on [-1,0], value -digit(m) at integer m >= 1, smoothstep transitions
// (half-depth bump between equal neighbors), constant -digit(B) past the end.
inline MapSpec make_f_lambda_smooth(const std::string& bits) {
  std::vector<int> d = detail::parse_bits(bits);
  const int B = static_cast<int>(d.size());
  VarList vars = make_vars({"x"});
  ExprPtr x = make_var(0);
  using detail::rc;
  using detail::smoothstep_of;

  auto node_val = [&](int j) { return Rational(-d[static_cast<size_t>(j) - 1]); };

  // Else-chain from the right: x > B is constant -digit(B).
  ExprPtr chain = make_const(node_val(B));
  for (int j = B - 1; j >= 1; --j) {
    Rational vj = node_val(j), vj1 = node_val(j + 1);
    ExprPtr seg;
    if (vj != vj1) {
      ExprPtr s = smoothstep_of(make_bin(BinOp::Sub, x, rc(j)));
      seg = make_bin(BinOp::Add, make_const(vj),
                     make_bin(BinOp::Mul, make_const(vj1 - vj), s));
    } else {
      // Bump to -1/2 via mirrored smoothsteps; both halves are flat at the
      // midpoint so the junction is smooth.
      Rational amp = Rational(-1, 2) - vj;
      ExprPtr up = smoothstep_of(
          make_bin(BinOp::Mul, rc(2), make_bin(BinOp::Sub, x, rc(j))));
      ExprPtr down = smoothstep_of(
          make_bin(BinOp::Mul, rc(2), make_bin(BinOp::Sub, rc(j + 1), x)));
      ExprPtr half1 = make_bin(BinOp::Add, make_const(vj),
                               make_bin(BinOp::Mul, make_const(amp), up));
      ExprPtr half2 = make_bin(BinOp::Add, make_const(vj),
                               make_bin(BinOp::Mul, make_const(amp), down));
      seg = make_piece(0, CmpOp::Le, Number::of(Rational(2 * j + 1, 2)), half1, half2);
    }
    chain = make_piece(0, CmpOp::Le, Number::of(Rational(j)), make_const(vj), chain);
    chain = make_piece(0, CmpOp::Lt, Number::of(Rational(j + 1)), seg, chain);
  }
  // (0, 1): transition from the plateau to -digit(1).
  {
    ExprPtr t0 = d[0] == 0 ? rc(0)
                           : make_un(UnOp::Neg, smoothstep_of(x));
    chain = make_piece(0, CmpOp::Le, Number::of(Rational(1)), make_const(node_val(1)),
                       chain);
    chain = make_piece(0, CmpOp::Lt, Number::of(Rational(1)), t0, chain);
  }
  chain = make_piece(0, CmpOp::Le, Number::of(Rational(0)), rc(0), chain);
  // x < -1: -exp(1/(x+1)), strictly increasing, flat into the plateau.
  ExprPtr left = make_un(
      UnOp::Neg,
      make_un(UnOp::Exp, make_bin(BinOp::Div, rc(1), make_bin(BinOp::Add, x, rc(1)))));
  chain = make_piece(0, CmpOp::Lt, Number::of(Rational(-1)), left, chain);

  Window w = Window::cube(-10.0, std::max(10.0, static_cast<double>(B) + 3.0), 1);
  return MapSpec(vars, {Expression(chain, vars)}, w,
                 "builtin:f_lambda_smooth?bits=" + bits);
}

// ---- planar polynomial families --------------------------------------------

// (x * prod_{j=1..i} (j - y)/j, 0): first component restricts to x on the
// x-axis; its zero set is the y-axis plus i horizontal lines y = 1..i.
inline MapSpec make_poly_family(int i) {
  if (i < 1 || i > 16) throw BuiltinError("poly_family index must be in 1..16");
  VarList vars = make_vars({"x", "y"});
  ExprPtr x = make_var(0), y = make_var(1);
  using detail::rc;
  ExprPtr acc = x;
  for (int j = 1; j <= i; ++j) {
    ExprPtr factor = make_bin(BinOp::Sub, rc(j), y);
    if (j > 1) factor = make_bin(BinOp::Div, factor, rc(j));
    acc = make_bin(BinOp::Mul, acc, factor);
  }
  Window w = Window::cube(-5.0, 5.0, 2);
  return MapSpec(vars, {Expression(acc, vars), Expression(rc(0), vars)}, w,
                 "builtin:poly_family?i=" + std::to_string(i));
}

// (piece(x <= 0 : 0 ; else : -exp(-1/x)), 0): image collapses to a point in
// two steps, so the cube equals the square while the square differs from f.
inline MapSpec make_exp_collapse() {
  VarList vars = make_vars({"x", "y"});
  ExprPtr x = make_var(0);
  using detail::rc;
  ExprPtr pos = make_un(UnOp::Neg,
                        make_un(UnOp::Exp, make_un(UnOp::Neg, make_bin(BinOp::Div, rc(1), x))));
  ExprPtr first = make_piece(0, CmpOp::Le, Number::of(Rational(0)), rc(0), pos);
  Window w = Window::cube(-5.0, 5.0, 2);
  return MapSpec(vars, {Expression(first, vars), Expression(rc(0), vars)}, w,
                 "builtin:exp_collapse");
}

// The 1D first factor of exp_collapse.
inline MapSpec make_exp_collapse_1d() {
  VarList vars = make_vars({"x"});
  ExprPtr x = make_var(0);
  using detail::rc;
  ExprPtr pos = make_un(UnOp::Neg,
                        make_un(UnOp::Exp, make_un(UnOp::Neg, make_bin(BinOp::Div, rc(1), x))));
  ExprPtr first = make_piece(0, CmpOp::Le, Number::of(Rational(0)), rc(0), pos);
  Window w = Window::cube(-5.0, 5.0, 1);
  return MapSpec(vars, {Expression(first, vars)}, w, "builtin:exp_collapse_1d");
}

// ---- Hardy-Weinberg offspring maps ------------------------------------------

// Genotype coordinates for k alleles: unordered pairs (i,j), 1 <= i <= j <= k,
// with (k,k) eliminated by the affine constraint "frequencies sum to one".
inline std::vector<std::pair<int, int>> hw_coords(int k) {
  std::vector<std::pair<int, int>> out;
  for (int i = 1; i <= k; ++i)
    for (int j = i; j <= k; ++j)
      if (!(i == k && j == k)) out.emplace_back(i, j);
  return out;
}

inline int hw_dim(int k) { return k * (k + 1) / 2 - 1; }

namespace detail {

// Allele frequency polynomials p_1..p_k over the genotype coordinates,
// embedded at variable offset `off` inside `total` ambient variables.
// p_i = (1/2) sum_j x_{(i,j)} + (1/2) x_{(i,i)} for i < k; p_k = 1 - sum p_i.
inline std::vector<Polynomial> hw_freqs_at(int k, int off, int total) {
  auto coords = hw_coords(k);
  auto coord_index = [&](int i, int j) {
    if (i > j) std::swap(i, j);
    for (size_t c = 0; c < coords.size(); ++c)
      if (coords[c].first == i && coords[c].second == j) return static_cast<int>(c);
    throw BuiltinError("internal: genotype coordinate lookup failed");
  };
  std::vector<Polynomial> p;
  p.reserve(static_cast<size_t>(k));
  Polynomial sum = Polynomial::constant(Rational(0), total);
  for (int i = 1; i < k; ++i) {
    Polynomial pi(total);
    for (int j = 1; j <= k; ++j)
      pi = pi + Polynomial::variable(off + coord_index(i, j), total);
    pi = pi + Polynomial::variable(off + coord_index(i, i), total);
    pi = Rational(1, 2) * pi;
    sum = sum + pi;
    p.push_back(std::move(pi));
  }
  p.push_back(Polynomial::constant(Rational(1), total) - sum);
  return p;
}

inline VarList hw_var_names(int k, const char* prefix) {
  std::vector<std::string> names;
  for (auto [i, j] : hw_coords(k))
    names.push_back(std::string(prefix) + std::to_string(i) + "_" + std::to_string(j));
  return make_vars(std::move(names));
}

}  // namespace detail

// Frequency polynomials over the d = hw_dim(k) genotype coordinates.
inline std::vector<Polynomial> hw_freq_polys(int k) {
  return detail::hw_freqs_at(k, 0, hw_dim(k));
}

// Offspring genotype components: x_{(i,j)} -> 2 p_i p_j (i != j), p_i^2 (i == j).
inline std::vector<Polynomial> hw_simple_polys(int k) {
  if (k < 2 || k > 8) throw BuiltinError("hw_simple allele count must be in 2..8");
  auto p = hw_freq_polys(k);
  std::vector<Polynomial> comps;
  for (auto [i, j] : hw_coords(k)) {
    Polynomial prod = p[static_cast<size_t>(i) - 1] * p[static_cast<size_t>(j) - 1];
    comps.push_back(i == j ? prod : Rational(2) * prod);
  }
  return comps;
}

inline MapSpec make_hw_simple(int k) {
  auto comps = hw_simple_polys(k);
  VarList vars = detail::hw_var_names(k, "x");
  std::vector<Expression> exprs;
  exprs.reserve(comps.size());
  for (const Polynomial& c : comps) exprs.push_back(c.to_expression(vars));
  Window w = Window::cube(0.0, 1.0, hw_dim(k));
  return MapSpec(vars, std::move(exprs), w, "builtin:hw_simple?k=" + std::to_string(k));
}

// Two-sex variant on E x E (male genotype block, then female block). Both
// output blocks coincide: offspring (i,j) gets p_i^M p_j^F + p_j^M p_i^F off
// the diagonal and p_i^M p_i^F on it.
inline std::vector<Polynomial> hw_sexed_polys(int k) {
  if (k < 2 || k > 6) throw BuiltinError("hw_sexed allele count must be in 2..6");
  const int d = hw_dim(k);
  auto pM = detail::hw_freqs_at(k, 0, 2 * d);
  auto pF = detail::hw_freqs_at(k, d, 2 * d);
  std::vector<Polynomial> block;
  for (auto [i, j] : hw_coords(k)) {
    const Polynomial &pmi = pM[static_cast<size_t>(i) - 1], &pfj = pF[static_cast<size_t>(j) - 1];
    const Polynomial &pmj = pM[static_cast<size_t>(j) - 1], &pfi = pF[static_cast<size_t>(i) - 1];
    block.push_back(i == j ? pmi * pfi : pmi * pfj + pmj * pfi);
  }
  std::vector<Polynomial> comps = block;
  comps.insert(comps.end(), block.begin(), block.end());
  return comps;
}

inline VarList hw_sexed_vars(int k) {
  std::vector<std::string> names;
  for (auto [i, j] : hw_coords(k))
    names.push_back("xM" + std::to_string(i) + "_" + std::to_string(j));
  for (auto [i, j] : hw_coords(k))
    names.push_back("xF" + std::to_string(i) + "_" + std::to_string(j));
  return make_vars(std::move(names));
}

inline MapSpec make_hw_sexed(int k) {
  auto comps = hw_sexed_polys(k);
  VarList vars = hw_sexed_vars(k);
  std::vector<Expression> exprs;
  exprs.reserve(comps.size());
  for (const Polynomial& c : comps) exprs.push_back(c.to_expression(vars));
  Window w = Window::cube(0.0, 1.0, 2 * hw_dim(k));
  return MapSpec(vars, std::move(exprs), w, "builtin:hw_sexed?k=" + std::to_string(k));
}

// ---- linear assemblies -------------------------------------------------------

struct JordanBlock {
  enum class Kind { One, MinusOne, Rot, Nil };
  Kind kind = Kind::One;
  long rot_num = 0;  // rotation angle 2*pi*rot_num/rot_den
  long rot_den = 1;
  int nil_size = 1;

  int dim() const {
    switch (kind) {
      case Kind::One:
      case Kind::MinusOne: return 1;
      case Kind::Rot: return 2;
      case Kind::Nil: return nil_size;
    }
    return 1;
  }
};

namespace detail {

// a*u + b*v with exact-zero/one coefficients elided.
inline ExprPtr lincomb(const Number& a, int u, const Number& b, int v) {
  auto term = [&](const Number& c, int idx) -> ExprPtr {
    if (c.exact) {
      if (c.rat == 0) return nullptr;
      if (c.rat == 1) return make_var(idx);
      if (c.rat == -1) return make_un(UnOp::Neg, make_var(idx));
      return make_bin(BinOp::Mul, make_const(c), make_var(idx));
    }
    if (c.flt == 0.0) return nullptr;
    return make_bin(BinOp::Mul, make_const(c), make_var(idx));
  };
  ExprPtr ta = term(a, u), tb = term(b, v);
  if (!ta && !tb) return make_const(0LL);
  if (!ta) return tb;
  if (!tb) return ta;
  return make_bin(BinOp::Add, ta, tb);
}

// cos/sin of 2*pi*num/den, exact when the angle is a multiple of pi/2.
inline std::pair<Number, Number> rot_entries(long num, long den) {
  if (den == 0) throw BuiltinError("rotation denominator must be nonzero");
  long long q4 = 4LL * num;
  if (q4 % den == 0) {
    long long quarter = ((q4 / den) % 4 + 4) % 4;
    static constexpr int cs[4] = {1, 0, -1, 0};
    static constexpr int sn[4] = {0, 1, 0, -1};
    return {Number::of(Rational(cs[quarter])), Number::of(Rational(sn[quarter]))};
  }
  double theta = 2.0 * std::numbers::pi * static_cast<double>(num) / static_cast<double>(den);
  return {Number::of_double(std::cos(theta)), Number::of_double(std::sin(theta))};
}

}  // namespace detail

inline MapSpec make_jordan(const std::vector<JordanBlock>& blocks) {
  if (blocks.empty()) throw BuiltinError("jordan needs at least one block");
  int m = 0;
  for (const JordanBlock& b : blocks) m += b.dim();
  std::vector<std::string> names;
  for (int i = 1; i <= m; ++i) names.push_back("x" + std::to_string(i));
  VarList vars = make_vars(std::move(names));

  std::vector<Expression> comps;
  comps.reserve(static_cast<size_t>(m));
  std::string tag = "builtin:jordan?blocks=";
  int at = 0;
  bool first_block = true;
  for (const JordanBlock& b : blocks) {
    if (!first_block) tag += ',';
    first_block = false;
    switch (b.kind) {
      case JordanBlock::Kind::One:
        comps.emplace_back(make_var(at), vars);
        tag += "1";
        break;
      case JordanBlock::Kind::MinusOne:
        comps.emplace_back(make_un(UnOp::Neg, make_var(at)), vars);
        tag += "-1";
        break;
      case JordanBlock::Kind::Rot: {
        auto [c, s] = detail::rot_entries(b.rot_num, b.rot_den);
        Number minus_s = s.exact ? Number::of(-s.rat) : Number::of_double(-s.flt);
        comps.emplace_back(detail::lincomb(c, at, minus_s, at + 1), vars);
        comps.emplace_back(detail::lincomb(s, at, c, at + 1), vars);
        tag += "rot:" + std::to_string(b.rot_num) + "/" + std::to_string(b.rot_den);
        break;
      }
      case JordanBlock::Kind::Nil: {
        if (b.nil_size < 1 || b.nil_size > 8)
          throw BuiltinError("nilpotent block size must be in 1..8");
        for (int r = 0; r + 1 < b.nil_size; ++r)
          comps.emplace_back(make_var(at + r + 1), vars);
        comps.emplace_back(make_const(0LL), vars);
        tag += "nil:" + std::to_string(b.nil_size);
        break;
      }
    }
    at += b.dim();
  }
  Window w = Window::cube(-1.0, 1.0, m);
  return MapSpec(vars, std::move(comps), w, tag);
}

inline MapSpec make_rot_refl_angle(long num, long den) {
  JordanBlock b;
  b.kind = JordanBlock::Kind::Rot;
  b.rot_num = num;
  b.rot_den = den;
  MapSpec base = make_jordan({b});
  VarList vars = make_vars({"x", "y"});
  std::vector<Expression> comps;
  for (const Expression& c : base.components()) comps.emplace_back(c.root(), vars);
  return MapSpec(vars, std::move(comps), Window::cube(-1.0, 1.0, 2),
                 "builtin:rot_refl?angle=" + std::to_string(num) + "/" + std::to_string(den));
}

inline MapSpec make_rot_refl_reflect() {
  VarList vars = make_vars({"x", "y"});
  std::vector<Expression> comps;
  comps.emplace_back(make_var(0), vars);
  comps.emplace_back(make_un(UnOp::Neg, make_var(1)), vars);
  return MapSpec(vars, std::move(comps), Window::cube(-1.0, 1.0, 2),
                 "builtin:rot_refl?reflect=1");
}

// ---- builtin URI dispatch ------------------------------------------------------

namespace detail {

struct BuiltinRef {
  std::string family;
  std::map<std::string, std::string> params;
};

inline BuiltinRef parse_builtin_uri(const std::string& uri) {
  const std::string prefix = "builtin:";
  if (uri.rfind(prefix, 0) != 0)
    throw BuiltinError("builtin reference must start with 'builtin:', got '" + uri + "'");
  std::string rest = uri.substr(prefix.size());
  BuiltinRef ref;
  size_t q = rest.find('?');
  ref.family = rest.substr(0, q);
  if (ref.family.empty()) throw BuiltinError("builtin family name is empty");
  if (q == std::string::npos) return ref;
  std::string query = rest.substr(q + 1);
  size_t pos = 0;
  while (pos < query.size()) {
    size_t amp = query.find('&', pos);
    std::string kv = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
    size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw BuiltinError("malformed builtin parameter '" + kv + "'");
    ref.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    if (amp == std::string::npos) break;
    pos = amp + 1;
  }
  return ref;
}

inline int param_int(const BuiltinRef& ref, const std::string& key) {
  auto it = ref.params.find(key);
  if (it == ref.params.end())
    throw BuiltinError("builtin " + ref.family + " requires parameter '" + key + "'");
  try {
    size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw BuiltinError("parameter '" + key + "' must be an integer, got '" + it->second + "'");
  }
}

inline std::vector<JordanBlock> parse_blocks(const std::string& text) {
  std::vector<JordanBlock> blocks;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string tok =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    JordanBlock b;
    if (tok == "1") {
      b.kind = JordanBlock::Kind::One;
    } else if (tok == "-1") {
      b.kind = JordanBlock::Kind::MinusOne;
    } else if (tok.rfind("rot:", 0) == 0) {
      std::string frac = tok.substr(4);
      size_t slash = frac.find('/');
      if (slash == std::string::npos)
        throw BuiltinError("rotation block must be rot:<num>/<den>, got '" + tok + "'");
      try {
        b.rot_num = std::stol(frac.substr(0, slash));
        b.rot_den = std::stol(frac.substr(slash + 1));
      } catch (const std::exception&) {
        throw BuiltinError("malformed rotation fraction in '" + tok + "'");
      }
      if (b.rot_den <= 0) throw BuiltinError("rotation denominator must be positive");
      b.kind = JordanBlock::Kind::Rot;
    } else if (tok.rfind("nil:", 0) == 0) {
      try {
        b.nil_size = std::stoi(tok.substr(4));
      } catch (const std::exception&) {
        throw BuiltinError("malformed nilpotent size in '" + tok + "'");
      }
      b.kind = JordanBlock::Kind::Nil;
    } else {
      throw BuiltinError("unknown block '" + tok + "'");
    }
    blocks.push_back(b);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return blocks;
}

}  // namespace detail

inline MapSpec make_builtin(const std::string& uri) {
  detail::BuiltinRef ref = detail::parse_builtin_uri(uri);
  auto param_str = [&](const std::string& key) {
    auto it = ref.params.find(key);
    if (it == ref.params.end())
      throw BuiltinError("builtin " + ref.family + " requires parameter '" + key + "'");
    return it->second;
  };
  if (ref.family == "f_lambda_cont") return make_f_lambda_cont(param_str("bits"));
  if (ref.family == "f_lambda_smooth") return make_f_lambda_smooth(param_str("bits"));
  if (ref.family == "poly_family") return make_poly_family(detail::param_int(ref, "i"));
  if (ref.family == "exp_collapse") return make_exp_collapse();
  if (ref.family == "exp_collapse_1d") return make_exp_collapse_1d();
  if (ref.family == "hw_simple") return make_hw_simple(detail::param_int(ref, "k"));
  if (ref.family == "hw_sexed") return make_hw_sexed(detail::param_int(ref, "k"));
  if (ref.family == "jordan") return make_jordan(detail::parse_blocks(param_str("blocks")));
  if (ref.family == "rot_refl") {
    if (ref.params.count("reflect")) return make_rot_refl_reflect();
    std::string angle = param_str("angle");
    size_t slash = angle.find('/');
    if (slash == std::string::npos)
      throw BuiltinError("rot_refl angle must be <num>/<den> of a full turn");
    try {
      return make_rot_refl_angle(std::stol(angle.substr(0, slash)),
                                 std::stol(angle.substr(slash + 1)));
    } catch (const BuiltinError&) {
      throw;
    } catch (const std::exception&) {
      throw BuiltinError("malformed rot_refl angle '" + angle + "'");
    }
  }
  throw BuiltinError("unknown builtin family '" + ref.family + "'");
}

}  // namespace babbage
