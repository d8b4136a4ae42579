#pragma once

// Explicit conjugacies onto linear normal forms, verified forward:
// a report certifies sup ||phi(f(z)) - G(phi(z))|| over a sample (or exact
// canonical-polynomial equality), never by inverting phi.
//
//   involution_conjugacy   1D involution -> -Id via phi = Id - f
//   extract_axis_factor    planar (g, 0) with g(x,0) = +-x: the factor q
//                          with g = sign*x + y*q(x,y), exact or by quadrature
//   normal_form_residual   hypothesis test + residual for the same shape
//   projection_conjugacy   (g, 0) -> P(x,y) = (x,0) via phi = (g, y)
//   strip_to_plane         psi(x,y) = (x, tan(pi*y / (2 h(x))))
//   hw_conjugacy           genotype maps -> projection / quadratic normal form
//
// Injectivity is screened probabilistically (pairwise separation of sampled
// phi-images); it is evidence, not a proof.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "babbage/builtins.hpp"
#include "babbage/equation.hpp"
#include "babbage/map_spec.hpp"

namespace babbage {

struct LinearizeError : ExprError {
  using ExprError::ExprError;
};

struct InjectivityScreen {
  double min_separation = 0.0;  // min infinity-distance between phi images
  long pair_count = 0;
  int points = 0;
};

struct ConjugacyReport {
  MapSpec phi;     // forward conjugacy
  MapSpec target;  // linear / normal-form target G
  double residual = 0.0;
  bool verified = false;
  std::string mode;  // "exact" | "sampled"
  InjectivityScreen injectivity;
  std::string domain;
  std::string detail;
};

namespace detail {

inline std::string describe_window(const Window& w) {
  std::string s;
  for (size_t a = 0; a < w.axes.size(); ++a) {
    if (a) s += " x ";
    s += "[" + std::to_string(w.axes[a][0]) + ", " + std::to_string(w.axes[a][1]) + "]";
  }
  return s;
}

inline InjectivityScreen injectivity_screen(const MapSpec& phi, const Window& w,
                                            const AnalysisParams& p) {
  InjectivityScreen s;
  int count = std::clamp(p.samples, 16, 512);
  auto pts = sample_window(w, count, p.seed);
  std::vector<std::vector<double>> img;
  img.reserve(pts.size());
  for (const auto& z : pts) img.push_back(phi.apply(z));
  s.points = static_cast<int>(img.size());
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < img.size(); ++i)
    for (size_t j = i + 1; j < img.size(); ++j) {
      double d = 0.0;
      for (size_t c = 0; c < img[i].size(); ++c)
        d = std::max(d, std::fabs(img[i][c] - img[j][c]));
      best = std::min(best, d);
      ++s.pair_count;
    }
  s.min_separation = img.size() < 2 ? 0.0 : best;
  return s;
}

inline double sampled_conjugacy_residual(const MapSpec& phi, const MapSpec& f,
                                         const MapSpec& g, const Window& w,
                                         const AnalysisParams& p) {
  auto pts = sample_window(w, std::max(p.samples, 64), p.seed);
  double sup = 0.0;
  for (const auto& z : pts) {
    auto lhs = phi.apply(f.apply(z));
    auto rhs = g.apply(phi.apply(z));
    for (size_t c = 0; c < lhs.size(); ++c)
      sup = std::max(sup, std::fabs(lhs[c] - rhs[c]));
  }
  return sup;
}

}  // namespace detail

// Forward verification phi . f = G . phi over a window sample; exact
// canonical-polynomial comparison when every map is exactly polynomial.
inline ConjugacyReport verify_conjugacy(const MapSpec& phi, const MapSpec& f,
                                        const MapSpec& g, const Window& w,
                                        const AnalysisParams& p, bool allow_exact = true) {
  if (phi.dim() != f.dim() || g.dim() != phi.dim())
    throw LinearizeError("conjugacy dimension mismatch");
  ConjugacyReport r;
  r.phi = phi;
  r.target = g;
  r.domain = detail::describe_window(w);

  bool exact_ok = allow_exact && !has_float_constants(phi) && !has_float_constants(f) &&
                  !has_float_constants(g);
  std::optional<std::vector<Polynomial>> pp, fp, gp;
  if (exact_ok) {
    pp = as_polynomials(phi);
    fp = as_polynomials(f);
    gp = as_polynomials(g);
    exact_ok = pp && fp && gp;
  }
  if (exact_ok) {
    try {
      bool equal = true;
      for (int c = 0; c < phi.dim() && equal; ++c)
        equal = (*pp)[static_cast<size_t>(c)].compose(*fp) ==
                (*gp)[static_cast<size_t>(c)].compose(*pp);
      r.mode = "exact";
      r.verified = equal;
      r.residual = equal ? 0.0 : detail::sampled_conjugacy_residual(phi, f, g, w, p);
      if (!equal) r.detail = "canonical polynomial comparison refutes the conjugacy";
      r.injectivity = detail::injectivity_screen(phi, w, p);
      return r;
    } catch (const DegreeCapError&) {
      // fall through to the sampled route
    }
  }
  r.mode = "sampled";
  r.residual = detail::sampled_conjugacy_residual(phi, f, g, w, p);
  r.verified = r.residual <= p.tol;
  r.injectivity = detail::injectivity_screen(phi, w, p);
  return r;
}

// 1D involution -> -Id, conjugated by phi = Id - f. Requires f to classify
// as an involution on the window; phi is then strictly increasing.
inline ConjugacyReport involution_conjugacy(const MapSpec& f, const Window& w,
                                            const AnalysisParams& p) {
  if (f.dim() != 1) throw LinearizeError("involution conjugacy is 1D only");
  RestrictionResult cls = restriction_classify(f, w.axes[0][0], w.axes[0][1], p);
  if (cls.kind != "involution")
    throw LinearizeError("precondition failed: map is not an involution on the window (classified as " +
                         (cls.kind.empty() ? std::string("unknown") : cls.kind) + ")");

  Expression phi1(make_bin(BinOp::Sub, make_var(0), f.components()[0].root()), f.vars());
  MapSpec phi(f.vars(), {phi1}, w);
  Expression neg(make_un(UnOp::Neg, make_var(0)), f.vars());
  MapSpec minus_id(f.vars(), {neg}, w);

  ConjugacyReport r = verify_conjugacy(phi, f, minus_id, w, p);

  // strict monotonicity of phi on the sampled grid.
  auto xs = grid_1d(w.axes[0][0], w.axes[0][1], std::clamp(p.samples / 4, 128, 2048));
  bool increasing = true;
  double prev = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double v = phi.apply(std::vector<double>{xs[i]})[0];
    if (i > 0 && v <= prev) increasing = false;
    prev = v;
  }
  r.detail = increasing ? "phi strictly increasing on the sampled grid"
                        : "warning: phi not strictly increasing on the sampled grid";
  if (!increasing) r.verified = false;
  return r;
}

// Decomposition g(x,y) = sign*x + y*q(x,y) for planar maps of shape (g, 0).
struct NormalForm2D {
  int sign = 1;
  bool second_zero = false;  // second component vanishes on the sample
  bool axis_ok = false;      // g(x,0) = sign*x on the sampled axis
  bool exact = false;        // polynomial division path produced factor_poly
  std::optional<Polynomial> factor_poly;
  std::function<double(double, double)> factor;  // quadrature evaluation of q
  double residual = 0.0;  // sup |g - (sign*x + y*q)| over the sample
  std::string detail;

  bool hypotheses_ok() const { return second_zero && axis_ok; }
};

namespace detail {

// Gauss-Legendre nodes/weights on [0,1], Newton-refined from Chebyshev
// initial guesses.
inline std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
  std::vector<std::pair<double, double>> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[static_cast<size_t>(i)] = {(x + 1.0) / 2.0, w / 2.0};  // map to [0,1]
  }
  return out;
}

// dg/dy as a double-valued closure: symbolic when the expression
// differentiates, central difference (h = 1e-6) otherwise.
inline std::function<double(double, double)> dy_closure(const Expression& g) {
  try {
    Expression dg = derivative(g, 1);
    return [dg](double x, double y) {
      double pt[2] = {x, y};
      return eval(dg, pt);
    };
  } catch (const ExprError&) {
    return [g](double x, double y) {
      double hi[2] = {x, y + 1e-6}, lo[2] = {x, y - 1e-6};
      return (eval(g, hi) - eval(g, lo)) / 2e-6;
    };
  }
}

struct NormalFormHypotheses {
  bool second_zero = false;
  bool axis_ok = false;
  int sign = 1;
};

inline NormalFormHypotheses check_normal_form_hypotheses(const MapSpec& f, const Window& w,
                                                         const AnalysisParams& p) {
  NormalFormHypotheses h;
  auto pts = sample_window(w, std::max(p.samples, 64), p.seed);
  double sup2 = 0.0;
  for (const auto& z : pts) sup2 = std::max(sup2, std::fabs(f.apply(z)[1]));
  h.second_zero = sup2 <= p.tol;

  auto xs = grid_1d(w.axes[0][0], w.axes[0][1], 512);
  double plus = 0.0, minus = 0.0;
  for (double x : xs) {
    double g0 = f.apply(std::vector<double>{x, 0.0})[0];
    plus = std::max(plus, std::fabs(g0 - x) / (1.0 + std::fabs(x)));
    minus = std::max(minus, std::fabs(g0 + x) / (1.0 + std::fabs(x)));
  }
  if (plus <= p.tol) {
    h.axis_ok = true;
    h.sign = 1;
  } else if (minus <= p.tol) {
    h.axis_ok = true;
    h.sign = -1;
  }
  return h;
}

// exact division of a polynomial by the variable `axis`; throws when any
// term lacks that variable (nonzero remainder)
inline Polynomial divide_by_variable(const Polynomial& q, int axis) {
  Polynomial out(q.nvars());
  for (const auto& [e, c] : q.terms()) {
    if (e[static_cast<size_t>(axis)] == 0)
      throw LinearizeError("nonzero remainder when dividing out the second variable");
    Polynomial mono = Polynomial::constant(c, q.nvars());
    for (size_t v = 0; v < e.size(); ++v) {
      uint32_t deg = e[v] - (static_cast<int>(v) == axis ? 1u : 0u);
      if (deg > 0) mono = mono * Polynomial::variable(static_cast<int>(v), q.nvars()).pow(static_cast<int>(deg));
    }
    out = out + mono;
  }
  return out;
}

}  // namespace detail

// Extract q with g(x,y) = sign*x + y*q(x,y) from f = (g, 0). Exact
// polynomial division when g is exactly polynomial; the quadrature closure
// q(x0,y0) = integral_0^1 dg/dy(x0, t*y0) dt is always provided.
inline NormalForm2D extract_axis_factor(const MapSpec& f, const Window& w,
                                        int quad_points, const AnalysisParams& p) {
  if (f.dim() != 2) throw LinearizeError("axis-factor extraction is 2D only");
  auto hyp = detail::check_normal_form_hypotheses(f, w, p);
  if (!hyp.second_zero)
    throw LinearizeError("hypothesis failed: second component does not vanish on the sample");
  if (!hyp.axis_ok)
    throw LinearizeError("hypothesis failed: first component is not +-x on the axis sample");

  NormalForm2D nf;
  nf.sign = hyp.sign;
  nf.second_zero = true;
  nf.axis_ok = true;

  const Expression& g = f.components()[0];
  auto nodes = detail::gauss_legendre_01(std::max(quad_points, 4));
  auto dg = detail::dy_closure(g);
  nf.factor = [dg, nodes](double x0, double y0) {
    double acc = 0.0;
    for (auto [t, wt] : nodes) acc += wt * dg(x0, t * y0);
    return acc;
  };

  if (!has_float_constants(f)) {
    if (auto polys = as_polynomials(f)) {
      Polynomial num =
          (*polys)[0] - Rational(nf.sign) * Polynomial::variable(0, 2);
      if (num.is_zero()) {
        nf.factor_poly = Polynomial(2);
      } else {
        nf.factor_poly = detail::divide_by_variable(num, 1);
      }
      nf.exact = true;
    }
  }
  return nf;
}

// Hypothesis test + residual: no precondition, failures come back as flags.
inline NormalForm2D normal_form_residual(const MapSpec& f, const Window& w,
                                         const AnalysisParams& p) {
  if (f.dim() != 2) throw LinearizeError("normal-form check is 2D only");
  auto hyp = detail::check_normal_form_hypotheses(f, w, p);
  NormalForm2D nf;
  nf.sign = hyp.sign;
  nf.second_zero = hyp.second_zero;
  nf.axis_ok = hyp.axis_ok;
  if (!nf.hypotheses_ok()) {
    nf.detail = !hyp.second_zero ? "second component not identically 0 on the sample"
                                 : "first component is not +-x on the axis";
    return nf;
  }
  nf = extract_axis_factor(f, w, 32, p);
  auto pts = sample_window(w, std::max(p.samples, 64), p.seed);
  double sup = 0.0;
  for (const auto& z : pts) {
    double g = f.apply(z)[0];
    double model = nf.sign * z[0] + z[1] * nf.factor(z[0], z[1]);
    sup = std::max(sup, std::fabs(g - model));
  }
  nf.residual = sup;
  return nf;
}

// Conjugacy of f = (g, 0) with the projection P(x,y) = (x,0) by
// phi(x,y) = (g(x,y), y), valid while dg/dx never vanishes on the window.
struct ProjectionReport {
  ConjugacyReport conj;
  bool second_zero = false;
  bool axis_ok = false;           // g(x,0) = x (sign +1 required)
  bool derivative_ok = false;     // min |dg/dx| > tol on the window
  bool hypothesis_ok = false;     // all three above
  double min_abs_dgdx = 0.0;
  std::vector<double> witness;    // argmin of |dg/dx| after refinement
  bool slice_monotone = false;    // sign of dg/dx constant per sampled slice
};

inline ProjectionReport projection_conjugacy(const MapSpec& f, const Window& w,
                                             const AnalysisParams& p) {
  if (f.dim() != 2) throw LinearizeError("projection conjugacy is 2D only");
  ProjectionReport r;
  auto hyp = detail::check_normal_form_hypotheses(f, w, p);
  r.second_zero = hyp.second_zero;
  r.axis_ok = hyp.axis_ok && hyp.sign == 1;

  const Expression& g = f.components()[0];
  std::function<double(double, double)> dgdx;
  try {
    Expression dg = derivative(g, 0);
    dgdx = [dg](double x, double y) {
      double pt[2] = {x, y};
      return eval(dg, pt);
    };
  } catch (const ExprError&) {
    dgdx = [&g](double x, double y) {
      double hi[2] = {x + 1e-6, y}, lo[2] = {x - 1e-6, y};
      return (eval(g, hi) - eval(g, lo)) / 2e-6;
    };
  }

  auto pts = sample_window(w, std::max(p.samples, 256), p.seed);
  std::vector<double> argmin = pts.empty() ? std::vector<double>{0.0, 0.0} : pts[0];
  double minval = std::numeric_limits<double>::infinity();
  for (const auto& z : pts) {
    double v = std::fabs(dgdx(z[0], z[1]));
    if (v < minval) {
      minval = v;
      argmin = z;
    }
  }
  double scale = 0.0;
  for (const auto& [lo, hi] : w.axes) scale = std::max(scale, hi - lo);
  auto obj = [&](const std::vector<double>& z) { return std::fabs(dgdx(z[0], z[1])); };
  argmin = detail::compass_minimize(obj, argmin, scale / 8.0, w);
  minval = obj(argmin);
  r.min_abs_dgdx = minval;
  r.witness = argmin;
  r.derivative_ok = minval > p.tol;
  r.hypothesis_ok = r.second_zero && r.axis_ok && r.derivative_ok;

  // slice monotonicity: the sign of dg/dx along each sampled horizontal slice
  auto ys = grid_1d(w.axes[1][0], w.axes[1][1], 33);
  auto xs = grid_1d(w.axes[0][0], w.axes[0][1], 129);
  bool mono = true;
  for (double y : ys) {
    int sign = 0;
    for (double x : xs) {
      double v = dgdx(x, y);
      int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
      if (s == 0) {
        mono = false;
        break;
      }
      if (sign == 0) sign = s;
      if (s != sign) {
        mono = false;
        break;
      }
    }
    if (!mono) break;
  }
  r.slice_monotone = mono;

  Expression phi2(make_var(1), f.vars());
  MapSpec phi(f.vars(), {g, phi2}, w);
  Expression p1(make_var(0), f.vars());
  Expression p2(make_const(0LL), f.vars());
  MapSpec proj(f.vars(), {p1, p2}, w);
  r.conj = verify_conjugacy(phi, f, proj, w, p);
  if (!r.hypothesis_ok) {
    r.conj.verified = false;
    r.conj.detail = "derivative hypothesis violated: |dg/dx| reaches " +
                    std::to_string(minval) + " inside the window";
  }
  return r;
}

// psi(x,y) = (x, tan(pi*y / (2 h(x)))) maps the strip {|y| < h(x)} onto the
// plane, slice by slice, fixing the x-axis.
struct StripReport {
  MapSpec psi;
  double h_min = 0.0;
  double residual = 0.0;   // sup ||psi(P(z)) - P(psi(z))|| over strip samples
  bool monotone = false;   // y -> psi_2(x, y) strictly increasing per sampled x
  bool verified = false;
};

inline StripReport strip_to_plane(const Expression& h, double x_lo, double x_hi,
                                  int samples) {
  if (h.nvars() != 1) throw LinearizeError("strip height must be a function of x alone");
  StripReport r;
  auto xs = grid_1d(x_lo, x_hi, std::max(samples, 64));
  double hmin = std::numeric_limits<double>::infinity();
  for (double x : xs) {
    double v = eval(h, std::vector<double>{x});
    hmin = std::min(hmin, v);
    if (!(v > 0.0))
      throw LinearizeError("strip height must be positive on the window (h(" +
                           std::to_string(x) + ") = " + std::to_string(v) + ")");
  }
  r.h_min = hmin;

  VarList vars = make_vars({"x", "y"});
  // h was parsed over {x}; variable index 0 is still x in the 2-var context
  ExprPtr angle = make_bin(BinOp::Div, make_bin(BinOp::Mul, make_const_f(M_PI), make_var(1)),
                           make_bin(BinOp::Mul, make_const(2LL), h.root()));
  Expression psi2(make_un(UnOp::Tan, angle), vars);
  Expression psi1(make_var(0), vars);
  Window strip;
  strip.axes = {{x_lo, x_hi}, {-0.9 * hmin, 0.9 * hmin}};
  MapSpec psi(vars, {psi1, psi2}, strip);
  r.psi = psi;

  // P fixes the axis pointwise, and psi fixes the axis, so psi(P) = P(psi)
  // reduces to psi_2(x, 0) = 0; verify on the sampled strip anyway.
  double sup = 0.0;
  auto pts = sample_window(strip, std::max(samples, 64), 0);
  for (const auto& z : pts) {
    auto pz = std::vector<double>{z[0], 0.0};
    auto lhs = psi.apply(pz);                       // psi(P(z))
    auto im = psi.apply(z);
    auto rhs = std::vector<double>{im[0], 0.0};     // P(psi(z))
    sup = std::max(sup, std::max(std::fabs(lhs[0] - rhs[0]), std::fabs(lhs[1] - rhs[1])));
  }
  r.residual = sup;

  bool mono = true;
  for (double x : grid_1d(x_lo, x_hi, 33)) {
    double hx = eval(h, std::vector<double>{x});
    auto ys = grid_1d(-0.999 * hx, 0.999 * hx, 65);
    double prev = -std::numeric_limits<double>::infinity();
    for (double y : ys) {
      double v = psi.apply(std::vector<double>{x, y})[1];
      if (v <= prev) {
        mono = false;
        break;
      }
      prev = v;
    }
    if (!mono) break;
  }
  r.monotone = mono;
  r.verified = mono && sup <= 1e-9;
  return r;
}

// ---- genotype-map conjugacies ------------------------------------------------

namespace detail {

inline MapSpec polys_to_map(const std::vector<Polynomial>& comps, VarList vars, Window w) {
  std::vector<Expression> exprs;
  exprs.reserve(comps.size());
  for (const Polynomial& c : comps) exprs.push_back(c.to_expression(vars));
  return MapSpec(std::move(vars), std::move(exprs), std::move(w));
}

}  // namespace detail

// phi for the one-population genotype map: p_i on diagonal coordinates,
// x_{(i,j)} - 2 p_i p_j off the diagonal.
inline MapSpec hw_phi_simple(int k) {
  const int d = hw_dim(k);
  auto p = hw_freq_polys(k);
  std::vector<Polynomial> comps;
  int idx = 0;
  for (auto [i, j] : hw_coords(k)) {
    if (i == j) {
      comps.push_back(p[static_cast<size_t>(i) - 1]);
    } else {
      comps.push_back(Polynomial::variable(idx, d) -
                      Rational(2) * (p[static_cast<size_t>(i) - 1] * p[static_cast<size_t>(j) - 1]));
    }
    ++idx;
  }
  return detail::polys_to_map(comps, detail::hw_var_names(k, "x"), Window::cube(0.0, 1.0, d));
}

// The target: a projection of rank k-1 that keeps diagonal coordinates and
// kills the off-diagonal ones.
inline MapSpec hw_projection_target(int k) {
  const int d = hw_dim(k);
  auto coords = hw_coords(k);
  std::vector<Polynomial> comps;
  for (auto [i, j] : coords) {
    if (i == j) {
      int self = 0;
      for (size_t c = 0; c < coords.size(); ++c)
        if (coords[c].first == i && coords[c].second == i) self = static_cast<int>(c);
      comps.push_back(Polynomial::variable(self, d));
    } else {
      comps.push_back(Polynomial(d));
    }
  }
  return detail::polys_to_map(comps, detail::hw_var_names(k, "y"), Window::cube(0.0, 1.0, d));
}

// Two-sex variant: phi^M uses the averaged frequencies a_i = (p_i^M + p_i^F)/2
// in place of p_i; phi^F records the male/female differences.
inline MapSpec hw_phi_sexed(int k) {
  const int d = hw_dim(k);
  auto pM = detail::hw_freqs_at(k, 0, 2 * d);
  auto pF = detail::hw_freqs_at(k, d, 2 * d);
  std::vector<Polynomial> a;
  for (int i = 0; i < k; ++i)
    a.push_back(Rational(1, 2) * (pM[static_cast<size_t>(i)] + pF[static_cast<size_t>(i)]));

  std::vector<Polynomial> comps;
  int idx = 0;
  for (auto [i, j] : hw_coords(k)) {  // male block
    if (i == j)
      comps.push_back(a[static_cast<size_t>(i) - 1]);
    else
      comps.push_back(Polynomial::variable(idx, 2 * d) -
                      Rational(2) * (a[static_cast<size_t>(i) - 1] * a[static_cast<size_t>(j) - 1]));
    ++idx;
  }
  idx = 0;
  for (auto [i, j] : hw_coords(k)) {  // female block: differences
    if (i == j)
      comps.push_back(Rational(1, 2) * (pM[static_cast<size_t>(i) - 1] - pF[static_cast<size_t>(i) - 1]));
    else
      comps.push_back(Polynomial::variable(idx, 2 * d) - Polynomial::variable(d + idx, 2 * d));
    ++idx;
  }
  VarList vars = hw_sexed_vars(k);
  return detail::polys_to_map(comps, vars, Window::cube(0.0, 1.0, 2 * d));
}

// Normal form in the new coordinates: diagonal male coordinates pass
// through, off-diagonal ones become -2 Y_i Y_j built from the female
// diagonal block, and the female block collapses to 0. The missing diagonal
// Y_k is implied by the affine constraint: Y_k = -sum_{i<k} Y_i.
inline MapSpec hw_sexed_target(int k) {
  const int d = hw_dim(k);
  auto coords = hw_coords(k);
  auto diag_index = [&](int i) {
    for (size_t c = 0; c < coords.size(); ++c)
      if (coords[c].first == i && coords[c].second == i) return static_cast<int>(c);
    throw BuiltinError("internal: diagonal coordinate lookup failed");
  };
  auto Y = [&](int i) {
    if (i < k) return Polynomial::variable(d + diag_index(i), 2 * d);
    Polynomial s(2 * d);
    for (int t = 1; t < k; ++t) s = s - Polynomial::variable(d + diag_index(t), 2 * d);
    return s;
  };
  std::vector<Polynomial> comps;
  for (auto [i, j] : coords) {  // male block
    if (i == j)
      comps.push_back(Polynomial::variable(diag_index(i), 2 * d));
    else
      comps.push_back(Rational(-2) * (Y(i) * Y(j)));
  }
  for (size_t c = 0; c < coords.size(); ++c) comps.push_back(Polynomial(2 * d));  // female block
  std::vector<std::string> names;
  for (auto [i, j] : coords) names.push_back("yM" + std::to_string(i) + "_" + std::to_string(j));
  for (auto [i, j] : coords) names.push_back("yF" + std::to_string(i) + "_" + std::to_string(j));
  return detail::polys_to_map(comps, make_vars(std::move(names)), Window::cube(0.0, 1.0, 2 * d));
}

// Conjugate the genotype maps to their linear / quadratic normal forms.
// Verification is exact (canonical polynomials) for k <= 3, sampled above.
inline ConjugacyReport hw_conjugacy(int k, const std::string& variant) {
  if (k < 2) throw LinearizeError("allele count must be at least 2");
  AnalysisParams p;
  if (variant == "simple") {
    MapSpec f = make_hw_simple(k);
    MapSpec phi = hw_phi_simple(k);
    MapSpec target = hw_projection_target(k);
    Window w = Window::cube(0.0, 1.0, hw_dim(k));
    if (k > 3) p.samples = 1024;  // keep the sampled route quick
    ConjugacyReport r = verify_conjugacy(phi, f, target, w, p, /*allow_exact=*/k <= 3);
    r.domain = "genotype simplex coordinates, cube [0,1]^" + std::to_string(hw_dim(k));
    return r;
  }
  if (variant == "sexed") {
    MapSpec f = make_hw_sexed(k);
    MapSpec phi = hw_phi_sexed(k);
    MapSpec target = hw_sexed_target(k);
    Window w = Window::cube(0.0, 1.0, 2 * hw_dim(k));
    if (k > 3) p.samples = 1024;
    ConjugacyReport r = verify_conjugacy(phi, f, target, w, p, /*allow_exact=*/k <= 3);
    r.domain = "two-group genotype coordinates, cube [0,1]^" + std::to_string(2 * hw_dim(k));
    return r;
  }
  throw LinearizeError("unknown variant: " + variant + " (expected simple or sexed)");
}

}  // namespace babbage
