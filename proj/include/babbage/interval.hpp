#pragma once

// 1D image enclosures and iterated image chains.
//
// enclose_image brackets the range of a 1D map over a closed interval by
// dense sampling plus golden-section refinement of every interior extremum
// the slope signs reveal. The result is an interval that contains every
// sampled value with an explicit slack per endpoint; it is a numeric
// enclosure (sound against the sampled evidence), not a formal one.
//
// image_chain iterates I_{l+1} = enclose(f, I_l) intersected with I_l, so the
// chain is decreasing by construction and its levels enclose the parts of the
// iterated images that persist inside the starting interval.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "babbage/equation.hpp"
#include "babbage/map_spec.hpp"

namespace babbage {

struct Interval1 {
  double lo = 0.0, hi = 0.0;
  bool lo_closed = true, hi_closed = true;

  double width() const { return hi - lo; }
  bool degenerate() const { return hi <= lo; }
};

inline std::optional<Interval1> intersect(const Interval1& a, const Interval1& b) {
  Interval1 out;
  out.lo = std::max(a.lo, b.lo);
  out.hi = std::min(a.hi, b.hi);
  out.lo_closed = (a.lo == out.lo ? a.lo_closed : true) && (b.lo == out.lo ? b.lo_closed : true);
  out.hi_closed = (a.hi == out.hi ? a.hi_closed : true) && (b.hi == out.hi ? b.hi_closed : true);
  if (out.lo > out.hi) return std::nullopt;
  if (out.lo == out.hi && !(out.lo_closed && out.hi_closed)) return std::nullopt;
  return out;
}

struct EncloseResult {
  Interval1 box;          // closed enclosure of the sampled image
  double slack_lo = 0.0;  // uncertainty attached to each endpoint
  double slack_hi = 0.0;
};

namespace detail {

constexpr double kGolden = 0.6180339887498949;  // 1/phi

// golden-section refinement of an extremum of scalar g inside [a, b];
// returns the argmax (sign = +1) or argmin (sign = -1) plus the residual
// value variation across the final bracket
struct Refined {
  double x;
  double value;
  double variation;
};

template <class G>
Refined golden_refine(G&& g, double a, double b, int sign) {
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double gc = sign * g(c), gd = sign * g(d);
  for (int it = 0; it < 60 && (b - a) > 1e-15; ++it) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - kGolden * (b - a);
      gc = sign * g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + kGolden * (b - a);
      gd = sign * g(d);
    }
  }
  Refined r;
  double va = sign * g(a), vb = sign * g(b);
  double best = std::max({gc, gd, va, vb});
  r.x = gc >= gd ? c : d;
  if (va >= best) {
    best = va;
    r.x = a;
  }
  if (vb > best) {
    best = vb;
    r.x = b;
  }
  r.value = sign * std::max({gc, gd, va, vb});
  r.variation = std::fabs(sign * std::max({gc, gd, va, vb}) -
                          sign * std::min({gc, gd, va, vb}));
  return r;
}

}  // namespace detail

// Enclose the image of a 1D map over a closed interval.
inline EncloseResult enclose_image(const MapSpec& f, const Interval1& I,
                                   int resolution = 512) {
  if (f.dim() != 1) throw ExprError("image enclosure is 1D only");
  if (resolution < 8) resolution = 8;
  const CompiledMap& cm = f.compiled();
  auto g = [&](double x) {
    double in[1] = {x};
    double out[1];
    cm.eval(in, out);
    return out[0];
  };

  EncloseResult r;
  if (I.width() <= 0.0) {
    double v = g(I.lo);
    r.box = {v, v, true, true};
    r.slack_lo = r.slack_hi = 1e-15;
    return r;
  }

  auto xs = grid_1d(I.lo, I.hi, resolution);
  std::vector<double> ys(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) ys[i] = g(xs[i]);

  // candidate extrema: every sample, plus refinements where the slope flips
  double best_min = ys[0], best_max = ys[0];
  double slack_min = 1e-15, slack_hi = 1e-15;
  auto offer = [&](double value, double slack) {
    if (value < best_min) {
      best_min = value;
      slack_min = slack;
    }
    if (value > best_max) {
      best_max = value;
      slack_hi = slack;
    }
  };
  for (size_t i = 1; i < ys.size(); ++i) offer(ys[i], 1e-15);

  for (size_t i = 0; i + 2 < xs.size(); ++i) {
    double s0 = ys[i + 1] - ys[i];
    double s1 = ys[i + 2] - ys[i + 1];
    if (s0 == 0.0 && s1 == 0.0) continue;  // plateau: samples already offered
    if (s0 > 0.0 && s1 < 0.0) {
      auto m = detail::golden_refine(g, xs[i], xs[i + 2], +1);
      offer(m.value, m.variation + 1e-15);
    } else if (s0 < 0.0 && s1 > 0.0) {
      auto m = detail::golden_refine(g, xs[i], xs[i + 2], -1);
      offer(m.value, m.variation + 1e-15);
    } else if (s0 == 0.0 || s1 == 0.0) {
      // plateau edge: cover the neighborhood with the local variation
      offer(ys[i + 1], std::fabs(s0) + std::fabs(s1) + 1e-15);
    }
  }

  r.box.lo = best_min - slack_min;
  r.box.hi = best_max + slack_hi;
  r.box.lo_closed = r.box.hi_closed = true;
  r.slack_lo = slack_min;
  r.slack_hi = slack_hi;
  return r;
}

struct ChainLevel {
  Interval1 box;
  double slack = 0.0;  // max endpoint slack contributed by this level
  bool empty = false;
};

struct ChainResult {
  std::vector<ChainLevel> levels;  // levels[0] is the starting interval
  bool monotone = true;            // decreasing by construction
};

// I_0 = I; I_{l+1} = enclose(f, I_l) meet I_l, for l = 0..depth-1.
inline ChainResult image_chain(const MapSpec& f, const Interval1& I, int depth,
                               int resolution = 512) {
  ChainResult r;
  r.levels.push_back({I, 0.0, false});
  for (int l = 0; l < depth; ++l) {
    const ChainLevel& prev = r.levels.back();
    if (prev.empty) {
      r.levels.push_back(prev);
      continue;
    }
    EncloseResult e = enclose_image(f, prev.box, resolution);
    ChainLevel next;
    next.slack = std::max(e.slack_lo, e.slack_hi);
    if (auto meet = intersect(e.box, prev.box)) {
      next.box = *meet;
    } else {
      next.empty = true;
      next.box = {0.0, 0.0, false, false};
    }
    r.levels.push_back(next);
  }
  return r;
}

// Sampled verification of f^n = f^k on an interval, with the 1D reduction:
// a continuous solution also satisfies the reduced pair (k+1, k) when n-k is
// odd, (k+2, k) when n-k is even. The image chain is computed to level k and
// the restriction of f to the final level is classified.
struct Verify1DResult {
  PowerPair requested;
  PowerPair reduced;
  bool holds = false;          // requested pair, sampled on the grid
  bool reduced_holds = false;  // reduced pair, sampled on the grid
  double deviation = 0.0;      // requested pair sup gap
  double witness = 0.0;
  ChainResult chain;
  RestrictionResult restriction;  // of f on the deepest chain level
};

inline Verify1DResult verify_1d_equation(const MapSpec& f, const Interval1& I, int n,
                                         int k, const AnalysisParams& p,
                                         int resolution = 1024) {
  if (f.dim() != 1) throw ExprError("interval verification is 1D only");
  if (n <= k || k < 0) throw ExprError("power pair needs n > k >= 0");
  Verify1DResult r;
  r.requested = {n, k};
  r.reduced = {(n - k) % 2 == 1 ? k + 1 : k + 2, k};

  const CompiledMap& cm = f.compiled();
  auto iter = [&](double x, int times) {
    double cur = x;
    double out[1];
    for (int j = 0; j < times; ++j) {
      double in[1] = {cur};
      cm.eval(in, out);
      cur = out[0];
    }
    return cur;
  };

  auto xs = grid_1d(I.lo, I.hi, std::max(resolution, 64));
  double dev = 0.0, dev_red = 0.0, wit = I.lo;
  for (double x : xs) {
    double fk = iter(x, k);
    double fn = iter(fk, n - k);
    double g = std::fabs(fn - fk);
    if (g > dev) {
      dev = g;
      wit = x;
    }
    double fr = iter(fk, r.reduced.n - k);
    dev_red = std::max(dev_red, std::fabs(fr - fk));
  }
  r.deviation = dev;
  r.witness = wit;
  r.holds = dev <= p.tol;
  r.reduced_holds = dev_red <= p.tol;

  r.chain = image_chain(f, I, k, std::max(resolution, 64));
  const ChainLevel& deepest = r.chain.levels.back();
  if (!deepest.empty) {
    r.restriction = restriction_classify(f, deepest.box.lo, deepest.box.hi, p);
  } else {
    r.restriction.kind = "other";
  }
  return r;
}

}  // namespace babbage
