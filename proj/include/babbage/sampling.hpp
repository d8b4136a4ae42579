#pragma once

// Deterministic samplers. Window sampling uses a Halton sequence (seed
// offsets the index stream), so identical parameters always produce the
// identical point set. Simplex sampling uses a seeded mt19937_64 with the
// ordered-spacings construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "babbage/rational.hpp"

namespace babbage {

// Knobs shared by every numeric analysis routine.
struct AnalysisParams {
  double tol = 1e-9;
  int samples = 4096;
  uint64_t seed = 0;
};

struct Window {
  std::vector<std::array<double, 2>> axes;  // closed [lo, hi] per axis

  static Window cube(double lo, double hi, int dim) {
    Window w;
    w.axes.assign(static_cast<size_t>(dim), {lo, hi});
    return w;
  }
  int dim() const { return static_cast<int>(axes.size()); }
};

namespace detail {

inline constexpr std::array<int, 12> kHaltonBases = {2,  3,  5,  7,  11, 13,
                                                     17, 19, 23, 29, 31, 37};

inline double radical_inverse(uint64_t index, int base) {
  double inv = 1.0 / base, scale = inv, value = 0.0;
  while (index > 0) {
    value += static_cast<double>(index % static_cast<uint64_t>(base)) * scale;
    index /= static_cast<uint64_t>(base);
    scale *= inv;
  }
  return value;
}

}  // namespace detail

// count points in the window; deterministic in (window, count, seed).
inline std::vector<std::vector<double>> sample_window(const Window& w, int count,
                                                      uint64_t seed = 0) {
  const size_t m = w.axes.size();
  std::vector<std::vector<double>> pts;
  pts.reserve(static_cast<size_t>(count));
  const uint64_t offset = 127 + seed * 1000003ull;
  for (int i = 0; i < count; ++i) {
    std::vector<double> p(m);
    for (size_t a = 0; a < m; ++a) {
      double t = detail::radical_inverse(offset + static_cast<uint64_t>(i),
                                         detail::kHaltonBases[a % 12]);
      p[a] = w.axes[a][0] + t * (w.axes[a][1] - w.axes[a][0]);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

// Uniform points of the solid simplex {x_i >= 0, sum x_i <= 1} in R^dim.
inline std::vector<std::vector<double>> sample_simplex(int dim, int count,
                                                       uint64_t seed = 0) {
  std::mt19937_64 rng(0x5eed0000ull + seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  pts.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    // dim + 1 exponential spacings normalized to sum 1; drop the last.
    std::vector<double> g(static_cast<size_t>(dim) + 1);
    double total = 0.0;
    for (double& v : g) {
      double u = uni(rng);
      if (u <= 0.0) u = 1e-300;
      v = -std::log(u);
      total += v;
    }
    std::vector<double> p(static_cast<size_t>(dim));
    for (int a = 0; a < dim; ++a) p[static_cast<size_t>(a)] = g[static_cast<size_t>(a)] / total;
    pts.push_back(std::move(p));
  }
  return pts;
}

// Exact-rational simplex points (small random numerators over a fixed
// denominator), for exact-mode spot checks.
inline std::vector<std::vector<Rational>> sample_simplex_exact(int dim, int count,
                                                               uint64_t seed = 0) {
  std::mt19937_64 rng(0xabcd0000ull + seed);
  const long long den = 1024;
  std::vector<std::vector<Rational>> pts;
  pts.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    // Sorted cut points of [0, den] induce nonnegative spacings summing to den.
    std::vector<long long> cuts(static_cast<size_t>(dim));
    for (auto& c : cuts) c = static_cast<long long>(rng() % (den + 1));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Rational> p(static_cast<size_t>(dim));
    long long prev = 0;
    for (int a = 0; a < dim; ++a) {
      p[static_cast<size_t>(a)] = Rational(cuts[static_cast<size_t>(a)] - prev, den);
      prev = cuts[static_cast<size_t>(a)];
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

namespace detail {

// compass search refining an argmin of `obj` from `start`: axis-aligned
// steps halving from `step0` down to 1e-12, clamped to the window
template <class Obj>
std::vector<double> compass_minimize(Obj&& obj, std::vector<double> start, double step0,
                                     const Window& w) {
  std::vector<double> cur = std::move(start);
  double best = obj(cur);
  double step = step0;
  const size_t m = cur.size();
  while (step > 1e-12) {
    bool moved = false;
    for (size_t a = 0; a < m; ++a) {
      for (double dir : {+1.0, -1.0}) {
        std::vector<double> cand = cur;
        cand[a] += dir * step;
        cand[a] = std::clamp(cand[a], w.axes[a][0], w.axes[a][1]);
        double v = obj(cand);
        if (v < best) {
          best = v;
          cur = cand;
          moved = true;
        }
      }
    }
    if (!moved) step /= 2.0;
  }
  return cur;
}

}  // namespace detail

// Inclusive uniform grid on [lo, hi].
inline std::vector<double> grid_1d(double lo, double hi, int count) {
  std::vector<double> xs(static_cast<size_t>(count));
  if (count == 1) {
    xs[0] = lo;
    return xs;
  }
  double h = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) xs[static_cast<size_t>(i)] = lo + h * i;
  xs.back() = hi;
  return xs;
}

}  // namespace babbage
