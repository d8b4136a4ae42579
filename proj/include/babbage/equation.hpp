#pragma once

// Detecting and checking iterate identities f^n = f^k (n > k >= 0).
//
// Two comparison routes. When every constant in the map is exact and every
// component canonicalizes to a polynomial, equality of iterates is decided
// symbolically (a certificate, not a sample). Otherwise iterates are compared
// pointwise on a deterministic window sample and "equal" means the sup gap
// stays within tol. Results carry which route ran, the measured deviation,
// and a witness point for refutations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "babbage/map_spec.hpp"
#include "babbage/sampling.hpp"

namespace babbage {

struct EquivalenceResult {
  bool equal = false;
  bool exact = false;           // certified by canonical polynomial identity
  double deviation = 0.0;       // sampled sup gap (0 on the exact route)
  std::vector<double> witness;  // sampled argmax point when unequal
  std::string warning;
};

struct PowerPair {
  int n = 0, k = 0;
};

struct CheckResult {
  bool holds = false;
  bool exact = false;
  double deviation = 0.0;
  std::vector<double> witness;
  std::string warning;
};

struct DetectResult {
  bool found = false;
  PowerPair pair;
  std::string label;  // periodic | idempotent | constant-power | eventually-periodic
  bool exact = false;
  double deviation = 0.0;
  std::string warning;
};

namespace detail {

// sup gap of two evaluations
inline double coord_gap(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double g = std::fabs(a[i] - b[i]);
    if (std::isnan(g)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, g);
  }
  return worst;
}

// identity components as polynomials
inline std::vector<Polynomial> identity_polys(int dim) {
  std::vector<Polynomial> out;
  out.reserve(static_cast<size_t>(dim));
  for (int c = 0; c < dim; ++c) out.push_back(Polynomial::variable(c, dim));
  return out;
}

// polynomial components of f^0..f^j_max; stops early (shorter vector) when
// the composition degree cap is hit
inline std::vector<std::vector<Polynomial>> polynomial_iterates(
    const std::vector<Polynomial>& f, int j_max) {
  std::vector<std::vector<Polynomial>> out;
  out.push_back(identity_polys(static_cast<int>(f.size())));
  for (int j = 1; j <= j_max; ++j) {
    std::vector<Polynomial> next;
    next.reserve(f.size());
    try {
      for (const Polynomial& c : f) next.push_back(c.compose(out.back()));
    } catch (const DegreeCapError&) {
      return out;
    }
    out.push_back(std::move(next));
  }
  return out;
}

// orbit table: iterates f^0..f^j_max of each sample point, flattened
struct OrbitTable {
  int dim = 0;
  int count = 0;
  std::vector<std::vector<double>> level;  // level[j] holds count*dim doubles

  static OrbitTable build(const MapSpec& f, const Window& w, int count, uint64_t seed,
                          int j_max) {
    OrbitTable t;
    t.dim = f.dim();
    t.count = count;
    auto pts = sample_window(w, count, seed);
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(count) * static_cast<size_t>(t.dim));
    for (const auto& p : pts) flat.insert(flat.end(), p.begin(), p.end());
    t.level.push_back(flat);
    const CompiledMap& cm = f.compiled();
    for (int j = 1; j <= j_max; ++j) {
      std::vector<double> next(flat.size());
      const std::vector<double>& prev = t.level.back();
      for (int i = 0; i < count; ++i) {
        std::span<const double> in(prev.data() + static_cast<size_t>(i) * t.dim,
                                   static_cast<size_t>(t.dim));
        std::span<double> out(next.data() + static_cast<size_t>(i) * t.dim,
                              static_cast<size_t>(t.dim));
        cm.eval(in, out);
      }
      t.level.push_back(std::move(next));
    }
    return t;
  }

  // sup gap between levels a and b, with the argmax starting point
  std::pair<double, std::vector<double>> gap(int a, int b) const {
    double worst = -1.0;
    int at = 0;
    const auto& la = level[static_cast<size_t>(a)];
    const auto& lb = level[static_cast<size_t>(b)];
    for (int i = 0; i < count; ++i) {
      std::span<const double> va(la.data() + static_cast<size_t>(i) * dim,
                                 static_cast<size_t>(dim));
      std::span<const double> vb(lb.data() + static_cast<size_t>(i) * dim,
                                 static_cast<size_t>(dim));
      double g = coord_gap(va, vb);
      if (g > worst) {
        worst = g;
        at = i;
      }
    }
    std::vector<double> witness(level[0].begin() + static_cast<size_t>(at) * dim,
                                level[0].begin() + static_cast<size_t>(at + 1) * dim);
    return {worst, witness};
  }
};

inline bool exact_route_available(const MapSpec& f) {
  return !has_float_constants(f) && as_polynomials(f).has_value();
}

}  // namespace detail

// Are two maps on the same space equal (as maps, not as trees)?
inline EquivalenceResult maps_equal(const MapSpec& a, const MapSpec& b, const Window& w,
                                    const AnalysisParams& p, bool force_sampled = false) {
  EquivalenceResult r;
  if (a.dim() != b.dim()) throw ExprError("maps_equal: dimension mismatch");
  if (!force_sampled && !has_float_constants(a) && !has_float_constants(b)) {
    auto pa = as_polynomials(a), pb = as_polynomials(b);
    if (pa && pb) {
      r.exact = true;
      r.equal = *pa == *pb;
      if (!r.equal) {
        // exact refutation still deserves a numeric witness
        auto pts = sample_window(w, std::max(64, p.samples / 8), p.seed);
        double worst = -1.0;
        for (const auto& pt : pts) {
          double g = detail::coord_gap(a.apply(pt), b.apply(pt));
          if (g > worst) {
            worst = g;
            r.witness = pt;
          }
        }
        r.deviation = std::max(worst, 0.0);
      }
      return r;
    }
  }
  auto pts = sample_window(w, p.samples, p.seed);
  double worst = -1.0;
  for (const auto& pt : pts) {
    double g = detail::coord_gap(a.apply(pt), b.apply(pt));
    if (g > worst) {
      worst = g;
      r.witness = pt;
    }
  }
  r.deviation = std::max(worst, 0.0);
  r.equal = r.deviation <= p.tol;
  if (std::isinf(r.deviation)) r.warning = "non-finite values encountered on the window";
  if (r.equal) r.witness.clear();
  return r;
}

// Does f^n = f^k hold on the window?
inline CheckResult check_pair(const MapSpec& f, int n, int k, const Window& w,
                              const AnalysisParams& p, bool force_sampled = false) {
  if (n <= k || k < 0) throw ExprError("power pair needs n > k >= 0");
  CheckResult r;
  if (!force_sampled && detail::exact_route_available(f)) {
    auto iters = detail::polynomial_iterates(*as_polynomials(f), n);
    if (static_cast<int>(iters.size()) > n) {
      r.exact = true;
      r.holds = iters[static_cast<size_t>(n)] == iters[static_cast<size_t>(k)];
      if (!r.holds) {
        auto pts = sample_window(w, std::max(64, p.samples / 8), p.seed);
        double worst = -1.0;
        for (const auto& pt : pts) {
          auto vn = f.iterate(pt, n);
          auto vk = f.iterate(pt, k);
          double g = detail::coord_gap(vn, vk);
          if (g > worst) {
            worst = g;
            r.witness = pt;
          }
        }
        r.deviation = std::max(worst, 0.0);
      }
      return r;
    }
    r.warning = "composition degree cap reached; fell back to sampled comparison";
  }
  auto t = detail::OrbitTable::build(f, w, p.samples, p.seed, n);
  auto [dev, wit] = t.gap(n, k);
  r.deviation = dev;
  r.holds = dev <= p.tol;
  if (!r.holds) r.witness = wit;
  if (std::isinf(dev)) {
    if (!r.warning.empty()) r.warning += "; ";
    r.warning += "non-finite values encountered on the window";
  }
  return r;
}

// Eligibility label for a detected pair.
inline std::string classify_label(const MapSpec& f, int n, int k, const Window& w,
                                  const AnalysisParams& p) {
  if (k == 0) return "periodic";
  if (n == 2 && k == 1) {
    // a constant map satisfies the pair trivially; call that out
    bool constant = false;
    if (!has_float_constants(f)) {
      if (auto polys = as_polynomials(f)) {
        constant = true;
        for (const Polynomial& c : *polys)
          if (!c.is_constant()) constant = false;
      }
    }
    if (!constant) {
      auto pts = sample_window(w, std::min(p.samples, 512), p.seed);
      if (!pts.empty()) {
        auto first = f.apply(pts.front());
        constant = true;
        for (const auto& pt : pts) {
          if (detail::coord_gap(f.apply(pt), first) > p.tol) {
            constant = false;
            break;
          }
        }
      }
    }
    return constant ? "constant-power" : "idempotent";
  }
  return "eventually-periodic";
}

// Scan (n, k) lexicographically (n ascending, then k ascending) for the
// minimal pair with f^n = f^k on the window.
inline DetectResult detect_minimal_pair(const MapSpec& f, int n_max, const Window& w,
                                        const AnalysisParams& p,
                                        bool force_sampled = false) {
  if (n_max < 2) throw ExprError("detection needs n_max >= 2");
  DetectResult r;
  bool exact = !force_sampled && detail::exact_route_available(f);
  if (exact) {
    auto iters = detail::polynomial_iterates(*as_polynomials(f), n_max);
    int have = static_cast<int>(iters.size()) - 1;
    for (int n = 2; n <= have; ++n) {
      for (int k = 0; k < n; ++k) {
        if (iters[static_cast<size_t>(n)] == iters[static_cast<size_t>(k)]) {
          r.found = true;
          r.pair = {n, k};
          r.exact = true;
          r.label = classify_label(f, n, k, w, p);
          return r;
        }
      }
    }
    if (have == n_max) return r;  // certified: no pair up to n_max
    r.warning = "composition degree cap reached at power " + std::to_string(have + 1) +
                "; continuing with sampled comparison";
  }
  auto t = detail::OrbitTable::build(f, w, p.samples, p.seed, n_max);
  for (int n = 2; n <= n_max; ++n) {
    for (int k = 0; k < n; ++k) {
      auto [dev, wit] = t.gap(n, k);
      if (dev <= p.tol) {
        r.found = true;
        r.pair = {n, k};
        r.deviation = dev;
        r.label = classify_label(f, n, k, w, p);
        return r;
      }
    }
  }
  return r;
}

// The power m(n-k) with m chosen so the iterate is idempotent: h = f^{k(n-k)}
// for k >= 1, h = f^n for the periodic case k = 0.
inline int idempotent_exponent(int n, int k) { return k == 0 ? n : k * (n - k); }

struct IdempotentResult {
  int power = 0;
  bool idempotent = false;
  bool exact = false;
  double deviation = 0.0;
  std::string warning;
};

// Verify that h = f^{idempotent_exponent(n,k)} satisfies h o h = h.
inline IdempotentResult idempotent_power(const MapSpec& f, int n, int k, const Window& w,
                                         const AnalysisParams& p) {
  if (n <= k || k < 0) throw ExprError("power pair needs n > k >= 0");
  IdempotentResult r;
  r.power = idempotent_exponent(n, k);
  CheckResult c = check_pair(f, 2 * r.power, r.power, w, p);
  r.idempotent = c.holds;
  r.exact = c.exact;
  r.deviation = c.deviation;
  r.warning = c.warning;
  return r;
}

// Behavior of a 1D map restricted to [lo, hi]: is the interval invariant, and
// is the restriction the identity, an involution, or something else?
struct RestrictionResult {
  bool invariant = false;
  std::string kind;  // identity | involution | other
  double deviation = 0.0;
  double witness = 0.0;
};

inline RestrictionResult restriction_classify(const MapSpec& f, double lo, double hi,
                                              const AnalysisParams& p) {
  if (f.dim() != 1) throw ExprError("restriction classification is 1D only");
  RestrictionResult r;
  int count = std::clamp(p.samples / 4, 128, 2048);
  auto xs = grid_1d(lo, hi, count);
  const CompiledMap& cm = f.compiled();
  auto at = [&](double x) {
    double in[1] = {x};
    double out[1];
    cm.eval(in, out);
    return out[0];
  };

  r.invariant = true;
  double id_dev = 0.0, inv_dev = 0.0;
  double id_wit = lo, inv_wit = lo;
  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (double x : xs) {
    double fx = at(x);
    if (fx < lo - p.tol || fx > hi + p.tol) {
      r.invariant = false;
      r.kind = "other";
      r.deviation = std::max(lo - fx, fx - hi);
      r.witness = x;
      return r;
    }
    double gd = std::fabs(fx - x);
    if (gd > id_dev) {
      id_dev = gd;
      id_wit = x;
    }
    double g2 = std::fabs(at(fx) - x);
    if (g2 > inv_dev) {
      inv_dev = g2;
      inv_wit = x;
    }
    if (fx >= prev + p.tol) decreasing = false;
    prev = fx;
  }
  if (id_dev <= p.tol) {
    r.kind = "identity";
    r.deviation = id_dev;
    r.witness = id_wit;
  } else if (inv_dev <= p.tol && decreasing) {
    r.kind = "involution";
    r.deviation = inv_dev;
    r.witness = inv_wit;
  } else {
    r.kind = "other";
    r.deviation = std::min(id_dev, inv_dev);
    r.witness = inv_dev < id_dev ? inv_wit : id_wit;
  }
  return r;
}

}  // namespace babbage
