#pragma once

// Linear self-maps: f(x) = Mx. For a power pair (n, k) the identity
// f^n = f^k is decided twice, by two algorithms that share no code path:
//
//   (a) matrix powers:  is M^n - M^k zero (exactly, or within tol)?
//   (b) eigenstructure: zero eigenvalues must be annihilated by step k and
//       the rest must be (n-k)-th roots of unity with full eigenspaces.
//
// Route selection is by exactness of the entries, not by size: rational
// entries get exact arithmetic (char poly via Faddeev-LeVerrier, minimal
// polynomial by rational elimination, divisibility of x^n - x^k), floating
// entries get double powers and a numeric eigensolve. The two verdicts are
// reported separately; disagreement is a red flag, not a tie-break.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "babbage/equation.hpp"
#include "babbage/map_spec.hpp"

namespace babbage {

// ---- strictly linear extraction ---------------------------------------------

struct LinearMatrix {
  bool exact = false;  // all source constants were exact rationals
  std::vector<std::vector<Rational>> rows_exact;
  std::vector<std::vector<double>> rows;
  int dim() const { return static_cast<int>(rows.size()); }
};

// Matrix of f when every component is a polynomial whose terms all have
// total degree exactly 1 (constant terms disqualify: linear, not affine).
inline std::optional<LinearMatrix> extract_linear(const MapSpec& f) {
  LinearMatrix lm;
  const int m = f.dim();
  lm.exact = !has_float_constants(f);
  lm.rows_exact.assign(static_cast<size_t>(m),
                       std::vector<Rational>(static_cast<size_t>(m), Rational(0)));
  auto polys = as_polynomials(f);
  if (!polys) return std::nullopt;
  for (int r = 0; r < m; ++r) {
    for (const auto& [mono, coeff] : (*polys)[static_cast<size_t>(r)].terms()) {
      uint32_t total = 0;
      int var = -1;
      for (size_t v = 0; v < mono.size(); ++v) {
        total += mono[v];
        if (mono[v] > 0) var = static_cast<int>(v);
      }
      if (total != 1) return std::nullopt;
      lm.rows_exact[static_cast<size_t>(r)][static_cast<size_t>(var)] = coeff;
    }
  }
  lm.rows.assign(static_cast<size_t>(m), std::vector<double>(static_cast<size_t>(m)));
  if (lm.exact) {
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        lm.rows[static_cast<size_t>(r)][static_cast<size_t>(c)] =
            to_double(lm.rows_exact[static_cast<size_t>(r)][static_cast<size_t>(c)]);
  } else {
    // re-evaluate entries from the source to avoid the dyadic detour
    std::vector<double> basis(static_cast<size_t>(m), 0.0);
    for (int c = 0; c < m; ++c) {
      basis[static_cast<size_t>(c)] = 1.0;
      auto col = f.apply(basis);
      for (int r = 0; r < m; ++r) lm.rows[static_cast<size_t>(r)][static_cast<size_t>(c)] = col[static_cast<size_t>(r)];
      basis[static_cast<size_t>(c)] = 0.0;
    }
  }
  return lm;
}

// ---- exact univariate polynomials (ascending coefficients) -------------------

namespace detail {

using UPoly = std::vector<Rational>;  // ascending; empty = zero polynomial

inline void upoly_trim(UPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

inline int upoly_deg(const UPoly& p) { return static_cast<int>(p.size()) - 1; }

inline UPoly upoly_mul(const UPoly& a, const UPoly& b) {
  if (a.empty() || b.empty()) return {};
  UPoly out(a.size() + b.size() - 1, Rational(0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  upoly_trim(out);
  return out;
}

// division with remainder; divisor must be nonzero
inline std::pair<UPoly, UPoly> upoly_divmod(UPoly a, const UPoly& b) {
  if (b.empty()) throw ExprError("univariate division by zero polynomial");
  UPoly q;
  upoly_trim(a);
  if (a.size() < b.size()) return {q, a};
  q.assign(a.size() - b.size() + 1, Rational(0));
  const Rational& lead = b.back();
  for (int i = static_cast<int>(a.size()) - 1;
       i >= static_cast<int>(b.size()) - 1; --i) {
    Rational c = a[static_cast<size_t>(i)] / lead;
    if (c == 0) continue;
    size_t off = static_cast<size_t>(i) - (b.size() - 1);
    q[off] = c;
    for (size_t j = 0; j < b.size(); ++j) a[off + j] -= c * b[j];
  }
  upoly_trim(a);
  upoly_trim(q);
  return {q, a};
}

inline bool upoly_divides(const UPoly& d, const UPoly& a) {
  return upoly_divmod(a, d).second.empty();
}

inline UPoly upoly_derivative(const UPoly& p) {
  if (p.size() <= 1) return {};
  UPoly out(p.size() - 1);
  for (size_t i = 1; i < p.size(); ++i) out[i - 1] = Rational(static_cast<long>(i)) * p[i];
  upoly_trim(out);
  return out;
}

inline UPoly upoly_monic(UPoly p) {
  upoly_trim(p);
  if (p.empty()) return p;
  Rational lead = p.back();
  for (Rational& c : p) c /= lead;
  return p;
}

inline UPoly upoly_gcd(UPoly a, UPoly b) {
  upoly_trim(a);
  upoly_trim(b);
  while (!b.empty()) {
    UPoly r = upoly_divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  return upoly_monic(std::move(a));
}

// x^n - x^k (n > k >= 0)
inline UPoly upoly_power_gap(int n, int k) {
  UPoly t(static_cast<size_t>(n) + 1, Rational(0));
  t[static_cast<size_t>(n)] = 1;
  t[static_cast<size_t>(k)] -= 1;
  return t;
}

inline std::string upoly_to_string(const UPoly& p) {
  if (p.empty()) return "0";
  std::string out;
  for (int i = upoly_deg(p); i >= 0; --i) {
    const Rational& c = p[static_cast<size_t>(i)];
    if (c == 0) continue;
    bool neg = c < 0;
    Rational mag = neg ? Rational(-c) : c;
    if (out.empty())
      out += neg ? "-" : "";
    else
      out += neg ? " - " : " + ";
    bool unit = mag == 1 && i > 0;
    if (!unit) out += rational_to_string(mag);
    if (i > 0) {
      if (!unit) out += "*";
      out += "x";
      if (i > 1) out += "^" + std::to_string(i);
    }
  }
  return out;
}

// ---- exact matrix arithmetic -------------------------------------------------

using RMat = std::vector<std::vector<Rational>>;

inline RMat rmat_identity(int m) {
  RMat out(static_cast<size_t>(m), std::vector<Rational>(static_cast<size_t>(m), Rational(0)));
  for (int i = 0; i < m; ++i) out[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1;
  return out;
}

inline RMat rmat_mul(const RMat& a, const RMat& b) {
  const size_t m = a.size();
  RMat out(m, std::vector<Rational>(m, Rational(0)));
  for (size_t i = 0; i < m; ++i)
    for (size_t l = 0; l < m; ++l) {
      if (a[i][l] == 0) continue;
      for (size_t j = 0; j < m; ++j) out[i][j] += a[i][l] * b[l][j];
    }
  return out;
}

inline RMat rmat_pow(const RMat& a, int e) {
  RMat acc = rmat_identity(static_cast<int>(a.size()));
  RMat base = a;
  while (e > 0) {
    if (e & 1) acc = rmat_mul(acc, base);
    base = rmat_mul(base, base);
    e >>= 1;
  }
  return acc;
}

inline bool rmat_equal(const RMat& a, const RMat& b) { return a == b; }

inline Rational rmat_trace(const RMat& a) {
  Rational t = 0;
  for (size_t i = 0; i < a.size(); ++i) t += a[i][i];
  return t;
}

// characteristic polynomial x^m + c1 x^{m-1} + ... + cm (Faddeev-LeVerrier)
inline UPoly char_poly(const RMat& M) {
  const int m = static_cast<int>(M.size());
  UPoly p(static_cast<size_t>(m) + 1, Rational(0));
  p[static_cast<size_t>(m)] = 1;
  RMat A = M;
  Rational c = -rmat_trace(A);
  p[static_cast<size_t>(m - 1)] = c;
  for (int j = 2; j <= m; ++j) {
    RMat shifted = A;
    for (int i = 0; i < m; ++i) shifted[static_cast<size_t>(i)][static_cast<size_t>(i)] += c;
    A = rmat_mul(M, shifted);
    c = -rmat_trace(A) / j;
    p[static_cast<size_t>(m - j)] = c;
  }
  return p;
}

// dependency of the last column on the earlier ones over the rationals;
// columns are arbitrary equal-length vectors
inline std::optional<std::vector<Rational>> column_dependency(
    const std::vector<std::vector<Rational>>& cols) {
  if (cols.empty()) return std::nullopt;
  const size_t rows = cols[0].size(), unknowns = cols.size() - 1;
  // solve  sum_j alpha_j cols[j] = cols.back()  by Gaussian elimination
  std::vector<std::vector<Rational>> a(rows, std::vector<Rational>(unknowns + 1));
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < unknowns; ++c) a[r][c] = cols[c][r];
    a[r][unknowns] = cols.back()[r];
  }
  size_t rank = 0;
  std::vector<size_t> pivot_col;
  for (size_t c = 0; c < unknowns && rank < rows; ++c) {
    size_t piv = rank;
    while (piv < rows && a[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(a[piv], a[rank]);
    Rational lead = a[rank][c];
    for (size_t j = c; j <= unknowns; ++j) a[rank][j] /= lead;
    for (size_t r = 0; r < rows; ++r) {
      if (r == rank || a[r][c] == 0) continue;
      Rational factor = a[r][c];
      for (size_t j = c; j <= unknowns; ++j) a[r][j] -= factor * a[rank][j];
    }
    pivot_col.push_back(c);
    ++rank;
  }
  for (size_t r = rank; r < rows; ++r)
    if (a[r][unknowns] != 0) return std::nullopt;  // inconsistent
  std::vector<Rational> alpha(unknowns, Rational(0));
  for (size_t i = 0; i < rank; ++i) alpha[pivot_col[i]] = a[i][unknowns];
  return alpha;
}

// minimal polynomial by the first linear dependency among vec(M^0..M^d)
inline UPoly minimal_poly(const RMat& M) {
  const int m = static_cast<int>(M.size());
  std::vector<std::vector<Rational>> cols;
  RMat power = rmat_identity(m);
  auto vec_of = [m](const RMat& a) {
    std::vector<Rational> v;
    v.reserve(static_cast<size_t>(m) * static_cast<size_t>(m));
    for (const auto& row : a) v.insert(v.end(), row.begin(), row.end());
    return v;
  };
  cols.push_back(vec_of(power));
  for (int d = 1; d <= m; ++d) {
    power = rmat_mul(power, M);
    cols.push_back(vec_of(power));
    if (auto alpha = column_dependency(cols)) {
      UPoly mu(static_cast<size_t>(d) + 1, Rational(0));
      mu[static_cast<size_t>(d)] = 1;
      for (size_t j = 0; j < alpha->size(); ++j) mu[j] = -(*alpha)[j];
      return mu;
    }
  }
  throw ExprError("minimal polynomial search exceeded the dimension bound");
}

// ---- float matrix helpers ------------------------------------------------------

inline Eigen::MatrixXd to_eigen(const std::vector<std::vector<double>>& rows) {
  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd M(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) M(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
  return M;
}

inline int svd_rank(const Eigen::MatrixXcd& A, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  double cutoff = tol * std::max(1.0, sv(0));
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

}  // namespace detail

// ---- the dual verdict -------------------------------------------------------------

struct LinearVerdict {
  bool linear = false;          // f extracted as strictly linear
  bool exact = false;           // rational-entry route ran
  bool holds_power = false;     // verdict (a)
  bool holds_spectral = false;  // verdict (b)
  bool agree = false;
  bool holds = false;  // conjunction of both verdicts

  // exact route artifacts
  std::string char_poly;
  std::string min_poly;
  int zero_multiplicity = -1;          // multiplicity of x in the minimal polynomial
  bool nonzero_diagonalizable = false;

  // float route artifacts
  std::vector<std::complex<double>> eigenvalues;

  std::string detail;
};

// Decide f^n = f^k for a strictly linear map both ways. tol applies to the
// float route only.
inline LinearVerdict linear_pair_check(const MapSpec& f, int n, int k,
                                       double tol = 1e-8) {
  if (n <= k || k < 0) throw ExprError("power pair needs n > k >= 0");
  LinearVerdict v;
  auto lm = extract_linear(f);
  if (!lm) {
    v.detail = "map is not strictly linear";
    return v;
  }
  v.linear = true;
  const int m = lm->dim();

  if (lm->exact) {
    v.exact = true;
    // (a) exact matrix powers
    detail::RMat M = lm->rows_exact;
    v.holds_power = detail::rmat_equal(detail::rmat_pow(M, n), detail::rmat_pow(M, k));

    // (b) eigenstructure through exact polynomial arithmetic
    detail::UPoly p = detail::char_poly(M);
    detail::UPoly mu = detail::minimal_poly(M);
    v.char_poly = detail::upoly_to_string(p);
    v.min_poly = detail::upoly_to_string(mu);

    int zero_mult = 0;
    while (zero_mult < static_cast<int>(mu.size()) &&
           mu[static_cast<size_t>(zero_mult)] == 0)
      ++zero_mult;
    v.zero_multiplicity = zero_mult;
    detail::UPoly q(mu.begin() + zero_mult, mu.end());
    detail::UPoly gq = detail::upoly_gcd(q, detail::upoly_derivative(q));
    v.nonzero_diagonalizable = detail::upoly_deg(gq) == 0;

    bool char_ok = true;
    {
      // necessary: char poly divides (x^n - x^k)^m
      detail::UPoly target = {Rational(1)};
      detail::UPoly gap = detail::upoly_power_gap(n, k);
      for (int i = 0; i < m; ++i) target = detail::upoly_mul(target, gap);
      char_ok = detail::upoly_divides(p, target);
    }
    bool unity_ok = detail::upoly_divides(q, detail::upoly_power_gap(n - k, 0));
    bool nilpotent_ok = zero_mult <= k;
    v.holds_spectral = char_ok && unity_ok && nilpotent_ok && v.nonzero_diagonalizable;

    v.detail = "zero multiplicity " + std::to_string(zero_mult) +
               (nilpotent_ok ? " <= " : " > ") + std::to_string(k) +
               "; nonzero part " +
               (unity_ok ? "divides x^" + std::to_string(n - k) + " - 1"
                         : "is no divisor of x^" + std::to_string(n - k) + " - 1");
  } else {
    // (a) floating matrix powers
    Eigen::MatrixXd M = detail::to_eigen(lm->rows);
    Eigen::MatrixXd Pn = Eigen::MatrixXd::Identity(m, m);
    for (int i = 0; i < n; ++i) Pn = Pn * M;
    Eigen::MatrixXd Pk = Eigen::MatrixXd::Identity(m, m);
    for (int i = 0; i < k; ++i) Pk = Pk * M;
    double scale = std::max(1.0, Pk.cwiseAbs().maxCoeff());
    v.holds_power = (Pn - Pk).cwiseAbs().maxCoeff() <= tol * scale;

    // (b) numeric eigenstructure
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    std::vector<std::complex<double>> evs;
    for (int i = 0; i < m; ++i) evs.push_back(es.eigenvalues()(i));
    std::sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) {
      if (a.real() != b.real()) return a.real() < b.real();
      return a.imag() < b.imag();
    });
    v.eigenvalues = evs;

    const double cluster_tol = 1e-6;
    bool ok = true;
    std::string why;
    size_t i = 0;
    while (i < evs.size()) {
      size_t j = i + 1;
      std::complex<double> sum = evs[i];
      while (j < evs.size() && std::abs(evs[j] - evs[i]) <= cluster_tol) {
        sum += evs[j];
        ++j;
      }
      int mult = static_cast<int>(j - i);
      std::complex<double> lambda = sum / static_cast<double>(mult);
      // defective zero eigenvalues can drift as far as machine-eps^(1/size)
      // under a floating eigensolve, so the zero test is deliberately loose;
      // a tiny-but-genuine eigenvalue lands here too, and the rank checks
      // below still decide it correctly to working tolerance
      if (std::abs(lambda) <= std::max(tol, 1e-4)) {
        if (k == 0) {
          ok = false;
          why = "zero eigenvalue but k = 0";
        } else {
          Eigen::MatrixXd Pk1 = Pk * M;
          int rk = detail::svd_rank(Pk.cast<std::complex<double>>(), tol);
          int rk1 = detail::svd_rank(Pk1.cast<std::complex<double>>(), tol);
          if (rk != rk1) {
            ok = false;
            why = "nilpotent part survives past step k";
          }
        }
      } else {
        std::complex<double> pw = std::pow(lambda, n - k);
        if (std::abs(pw - 1.0) > 1e-6) {
          ok = false;
          why = "eigenvalue is not a root of unity of order dividing n - k";
        } else {
          Eigen::MatrixXcd shifted = M.cast<std::complex<double>>();
          for (int d = 0; d < m; ++d) shifted(d, d) -= lambda;
          if (detail::svd_rank(shifted, tol) != m - mult) {
            ok = false;
            why = "repeated unimodular eigenvalue with deficient eigenspace";
          }
        }
      }
      i = j;
    }
    v.holds_spectral = ok;
    v.detail = ok ? "eigenstructure compatible" : why;
  }
  v.agree = v.holds_power == v.holds_spectral;
  v.holds = v.holds_power && v.holds_spectral;
  return v;
}

// ---- affine maps of the complex line ------------------------------------------

struct AffineComplexResult {
  std::string kind;  // constant | identity | translation-no-solution | rotation | no-solution
  bool holds = false;               // for the requested pair
  double angle = 0.0;               // radians, rotation case
  std::complex<double> center;      // fixed point, rotation case
  bool minimal_found = false;
  PowerPair minimal;                // minimal pair scanning orders up to 64
  std::string detail;
};

// f(z) = a z + b on the complex line; decide f^n = f^k and classify.
inline AffineComplexResult affine_complex_classify(std::complex<double> a,
                                                   std::complex<double> b, int n, int k,
                                                   double tol = 1e-9) {
  if (n <= k || k < 0) throw ExprError("power pair needs n > k >= 0");
  AffineComplexResult r;
  if (std::abs(a) <= tol) {
    r.kind = "constant";
    r.holds = k >= 1;  // every iterate from the first on is the constant b
    r.minimal_found = true;
    r.minimal = {2, 1};
    r.detail = "constant maps satisfy every pair with k >= 1";
    return r;
  }
  if (std::abs(a - 1.0) <= tol) {
    if (std::abs(b) <= tol) {
      r.kind = "identity";
      r.holds = true;
      r.minimal_found = true;
      r.minimal = {2, 0};  // the identity is 1-periodic
      r.detail = "identity map";
      return r;
    }
    r.kind = "translation-no-solution";
    r.holds = false;
    r.detail = "nonzero translation: iterates never repeat";
    return r;
  }
  // genuine multiplier: f^j(z) = a^j z + b (a^j - 1)/(a - 1)
  r.center = b / (1.0 - a);
  r.angle = std::arg(a);
  std::complex<double> pw = std::pow(a, n - k);
  if (std::abs(pw - 1.0) <= tol * (n - k)) {
    r.kind = "rotation";
    r.holds = true;
  }
  for (int d = 1; d <= 64; ++d) {
    if (std::abs(std::pow(a, d) - 1.0) <= tol * d) {
      r.minimal_found = true;
      r.minimal = {d, 0};
      if (r.kind.empty()) r.kind = "rotation";
      break;
    }
  }
  if (r.kind.empty()) {
    r.kind = "no-solution";
    r.detail = "multiplier is not a root of unity up to order 64";
  } else if (r.detail.empty()) {
    r.detail = "rotation about the fixed point";
  }
  return r;
}

}  // namespace babbage
