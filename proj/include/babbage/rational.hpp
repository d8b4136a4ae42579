#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

namespace babbage {

// Exact rational scalar used by the canonical polynomial layer and by
// exact-mode evaluation. Arbitrary precision: iterated composition squares
// degrees and coefficient sizes, so fixed-width integers are not an option.
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational rat_pow(const Rational& base, int exponent) {
  // exponent >= 0 only; negative powers never arise (grammar restriction).
  Rational acc(1);
  Rational b = base;
  int e = exponent;
  while (e > 0) {
    if (e & 1) acc *= b;
    b *= b;
    e >>= 1;
  }
  return acc;
}

inline std::string rational_to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace babbage
