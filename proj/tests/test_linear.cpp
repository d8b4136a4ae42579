#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <string>

#include "babbage/builtins.hpp"
#include "babbage/equation.hpp"
#include "babbage/linear_check.hpp"

using namespace babbage;

namespace {

// ground truth for a block assembly, straight from block arithmetic:
//   unit block        -> any pair
//   negated block     -> n == k (mod 2)
//   rotation by r/q   -> q divides (n-k)*r
//   nilpotent size l  -> k >= l
bool blocks_truth(const std::vector<JordanBlock>& blocks, int n, int k) {
  for (const JordanBlock& b : blocks) {
    switch (b.kind) {
      case JordanBlock::Kind::One: break;
      case JordanBlock::Kind::MinusOne:
        if ((n - k) % 2 != 0) return false;
        break;
      case JordanBlock::Kind::Rot: {
        long long prod = static_cast<long long>(n - k) * b.rot_num;
        if (prod % b.rot_den != 0) return false;
        break;
      }
      case JordanBlock::Kind::Nil:
        if (k < b.nil_size) return false;
        break;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("exact quarter turn: dual verdict and frozen polynomials") {
  MapSpec f = make_builtin("builtin:jordan?blocks=rot:1/4");
  auto v = linear_pair_check(f, 4, 0);
  REQUIRE(v.linear);
  CHECK(v.exact);
  CHECK(v.holds_power);
  CHECK(v.holds_spectral);
  CHECK(v.agree);
  CHECK(v.holds);
  CHECK(v.char_poly == "x^2 + 1");
  CHECK(v.min_poly == "x^2 + 1");
  CHECK(v.zero_multiplicity == 0);
  CHECK(v.nonzero_diagonalizable);

  auto bad = linear_pair_check(f, 2, 0);
  CHECK_FALSE(bad.holds);
  CHECK(bad.agree);
}

TEST_CASE("nilpotent shift: power pair needs k at least the block size") {
  MapSpec f = make_builtin("builtin:jordan?blocks=nil:3");
  auto good = linear_pair_check(f, 4, 3);
  CHECK(good.holds);
  CHECK(good.agree);
  CHECK(good.min_poly == "x^3");
  CHECK(good.zero_multiplicity == 3);

  auto bad = linear_pair_check(f, 3, 2);
  CHECK_FALSE(bad.holds);
  CHECK(bad.agree);
  CHECK_FALSE(bad.holds_spectral);
}

TEST_CASE("mixed exact assembly frozen cases") {
  MapSpec f = make_builtin("builtin:jordan?blocks=1,-1,rot:1/4,nil:2");
  auto yes = linear_pair_check(f, 6, 2);
  CHECK(yes.holds);
  CHECK(yes.agree);
  CHECK(yes.exact);

  auto no = linear_pair_check(f, 5, 1);  // parity and rotation fine, k too small
  CHECK_FALSE(no.holds);
  CHECK(no.agree);
}

TEST_CASE("float fifth-turn rotations") {
  MapSpec f = make_builtin("builtin:jordan?blocks=rot:1/5");
  auto yes = linear_pair_check(f, 6, 1);
  REQUIRE(yes.linear);
  CHECK_FALSE(yes.exact);
  CHECK(yes.holds);
  CHECK(yes.agree);
  REQUIRE(yes.eigenvalues.size() == 2);
  // frozen: eigenvalues e^{+-2 pi i/5} have real part cos(72 deg) ~ 0.309017
  CHECK(yes.eigenvalues[0].real() == Catch::Approx(0.3090169943749474).margin(1e-12));

  auto no = linear_pair_check(f, 5, 1);
  CHECK_FALSE(no.holds);
  CHECK(no.agree);
}

TEST_CASE("float rotation with a nilpotent companion") {
  MapSpec f = make_builtin("builtin:jordan?blocks=rot:1/5,nil:2");
  auto yes = linear_pair_check(f, 7, 2);
  CHECK(yes.holds);
  CHECK(yes.agree);
  auto no = linear_pair_check(f, 6, 1);  // k = 1 < nilpotent size 2
  CHECK_FALSE(no.holds);
  CHECK(no.agree);
}

TEST_CASE("random assemblies: both verdicts match block arithmetic") {
  std::mt19937_64 rng(42);
  auto randint = [&](int lo, int hi) {
    return static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1)) + lo;
  };
  for (int trial = 0; trial < 60; ++trial) {
    int nblocks = randint(1, 3);
    std::vector<JordanBlock> blocks;
    for (int i = 0; i < nblocks; ++i) {
      JordanBlock b;
      switch (randint(0, 3)) {
        case 0: b.kind = JordanBlock::Kind::One; break;
        case 1: b.kind = JordanBlock::Kind::MinusOne; break;
        case 2: {
          b.kind = JordanBlock::Kind::Rot;
          b.rot_den = randint(2, 6);
          b.rot_num = randint(1, static_cast<int>(b.rot_den) - 1);
          break;
        }
        default:
          b.kind = JordanBlock::Kind::Nil;
          b.nil_size = randint(1, 4);
      }
      blocks.push_back(b);
    }
    int n = randint(2, 8);
    int k = randint(0, n - 1);
    bool truth = blocks_truth(blocks, n, k);
    MapSpec f = make_jordan(blocks);
    auto v = linear_pair_check(f, n, k);
    INFO("trial " << trial << " map " << f.builtin_tag() << " pair (" << n << "," << k
                  << ") truth " << truth << " power " << v.holds_power << " spectral "
                  << v.holds_spectral << " detail: " << v.detail);
    REQUIRE(v.linear);
    CHECK(v.agree);
    CHECK(v.holds == truth);
  }
}

TEST_CASE("linear verdicts line up with the generic iterate comparison") {
  AnalysisParams p;
  for (const char* uri : {"builtin:jordan?blocks=rot:1/4,nil:2",
                          "builtin:jordan?blocks=-1,rot:1/3"}) {
    MapSpec f = make_builtin(uri);
    Window w = effective_window(f, std::nullopt);
    for (int n = 2; n <= 6; ++n) {
      for (int k = 0; k < n; ++k) {
        auto lv = linear_pair_check(f, n, k);
        auto cp = check_pair(f, n, k, w, p);
        INFO(uri << " pair (" << n << "," << k << ")");
        CHECK(lv.holds == cp.holds);
      }
    }
  }
}

TEST_CASE("non-linear and affine maps are rejected") {
  auto vars = make_vars({"x"});
  MapSpec sq(vars, {parse_expression("x^2", vars)}, Window::cube(-1, 1, 1));
  CHECK_FALSE(extract_linear(sq).has_value());
  MapSpec aff(vars, {parse_expression("x + 1", vars)}, Window::cube(-1, 1, 1));
  CHECK_FALSE(extract_linear(aff).has_value());
  auto v = linear_pair_check(sq, 2, 1);
  CHECK_FALSE(v.linear);

  MapSpec zero(vars, {parse_expression("0", vars)}, Window::cube(-1, 1, 1));
  auto lz = extract_linear(zero);  // the zero map is linear
  REQUIRE(lz.has_value());
  CHECK(lz->rows[0][0] == 0.0);
}

TEST_CASE("affine maps of the complex line") {
  using namespace std::complex_literals;
  auto rot = affine_complex_classify(1i, 0.0, 5, 1);
  CHECK(rot.kind == "rotation");
  CHECK(rot.holds);
  CHECK(rot.angle == Catch::Approx(1.5707963267948966));
  CHECK(std::abs(rot.center) <= 1e-12);
  REQUIRE(rot.minimal_found);
  CHECK(rot.minimal.n == 4);
  CHECK(rot.minimal.k == 0);

  auto trans = affine_complex_classify(1.0, 7.0, 3, 1);
  CHECK(trans.kind == "translation-no-solution");
  CHECK_FALSE(trans.holds);

  auto cons = affine_complex_classify(0.0, 7.0, 2, 1);
  CHECK(cons.kind == "constant");
  CHECK(cons.holds);
  auto cons0 = affine_complex_classify(0.0, 7.0, 3, 0);
  CHECK_FALSE(cons0.holds);

  auto idm = affine_complex_classify(1.0, 0.0, 4, 2);
  CHECK(idm.kind == "identity");
  CHECK(idm.holds);
  CHECK(idm.minimal.n == 2);
  CHECK(idm.minimal.k == 0);

  auto stretch = affine_complex_classify(1.5, 2.0, 3, 1);
  CHECK(stretch.kind == "no-solution");
  CHECK_FALSE(stretch.holds);

  std::complex<double> a = std::polar(1.0, 2.0 * 3.141592653589793 / 6.0);
  auto hex = affine_complex_classify(a, std::complex<double>(1.0, 2.0), 8, 2);
  CHECK(hex.kind == "rotation");
  CHECK(hex.holds);
  REQUIRE(hex.minimal_found);
  CHECK(hex.minimal.n == 6);
  CHECK(hex.minimal.k == 0);
  std::complex<double> expect_center = std::complex<double>(1.0, 2.0) / (1.0 - a);
  CHECK(std::abs(hex.center - expect_center) <= 1e-12);
}
