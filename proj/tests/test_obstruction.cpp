#include "babbage/obstruction.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>
#include <utility>

#include "babbage/builtins.hpp"
#include "babbage/map_spec.hpp"

using namespace babbage;

static MapSpec map2(const std::string& a, const std::string& b) {
  auto vars = make_vars({"x", "y"});
  return MapSpec(vars, {parse_expression(a, vars), parse_expression(b, vars)}, std::nullopt);
}

static Expression expr2(const std::string& body) {
  auto vars = make_vars({"x", "y"});
  return parse_expression(body, vars);
}

TEST_CASE("grid windows are validated") {
  MapSpec f = map2("x", "y");
  CHECK_THROWS_AS(preimage_components(f, {0.0, 0.0}, GridWindow::cube(0, 1, 2, 4)),
                  ObstructionError);
  CHECK_THROWS_AS(preimage_components(f, {0.0, 0.0}, GridWindow::cube(0, 1, 3, 16)),
                  ObstructionError);
  CHECK_THROWS_AS(preimage_components(f, {0.0}, GridWindow::cube(0, 1, 2, 16)),
                  ObstructionError);
  GridWindow bad = GridWindow::cube(0, 1, 2, 16);
  bad.axes[1] = {1.0, 1.0};
  CHECK_THROWS_AS(preimage_components(f, {0.0, 0.0}, bad), ObstructionError);
  CHECK_THROWS_AS(preimage_components(f, {0.0, 0.0}, GridWindow::cube(0, 1, 2, 4096)),
                  ObstructionError);
}

// Two cells that touch only at a corner must stay separate components;
// a shared face joins them. The indicator drops exactly on the chosen
// cells [0.75,1]^2 and [1,1.25]^2 of the 8x8 grid on [0,2]^2.
TEST_CASE("adjacency is by face, not by corner") {
  const char* diagonal =
      "piece(x <= 0.75 : 1 ; else :"
      " piece(x <= 1 : piece(y <= 0.75 : 1 ; else : piece(y <= 1 : 0 ; else : 1)) ; else :"
      " piece(x <= 1.25 : piece(y <= 1 : 1 ; else : piece(y <= 1.25 : 0 ; else : 1)) ;"
      " else : 1)))";
  MapSpec f = map2(diagonal, "0");
  ComponentReport r = preimage_components(f, {0.0, 0.0}, GridWindow::cube(0, 2, 2, 8));
  CHECK(r.marked == 2);
  CHECK(r.count == 2);

  // same two columns, but the cells share the face y = 1 in column one
  const char* stacked =
      "piece(x <= 0.75 : 1 ; else :"
      " piece(x <= 1 : piece(y <= 0.75 : 1 ; else : piece(y <= 1.25 : 0 ; else : 1)) ;"
      " else : 1))";
  MapSpec g = map2(stacked, "0");
  ComponentReport s = preimage_components(g, {0.0, 0.0}, GridWindow::cube(0, 2, 2, 8));
  CHECK(s.marked == 2);
  CHECK(s.count == 1);
}

TEST_CASE("preimage of the origin under (x + y*x^2, 0) splits into three pieces") {
  MapSpec f = map2("x + y*x^2", "0");
  ComponentReport r =
      preimage_components(f, {0.0, 0.0}, GridWindow::cube(-3, 3, 2, 600));
  // zero set is x(1 + x*y) = 0: the vertical line plus both hyperbola branches
  REQUIRE(r.count == 3);
  CHECK(r.stable);
  CHECK(r.doubled_count == 3);
  REQUIRE(r.doubled_resolution == std::vector<int>{1200, 1200});
  REQUIRE(r.representatives.size() == 3);
  // sweep runs x slowly upward: upper-left branch, then the line, then the
  // lower-right branch
  CHECK(r.representatives[0][0] < -2.9);
  CHECK(std::fabs(r.representatives[0][1] - 1.0 / 3.0) < 0.05);
  CHECK(std::fabs(r.representatives[1][0]) < 0.05);
  CHECK(r.representatives[2][0] > 0.3);
}

TEST_CASE("crossing-line zero sets stay one component") {
  for (int i : {1, 2, 3}) {
    MapSpec f = make_builtin("builtin:poly_family?i=" + std::to_string(i));
    ComponentReport r =
        preimage_components(f, {0.0, 0.0}, GridWindow::cube(-5, 5, 2, 200));
    INFO("family index " << i);
    CHECK(r.count == 1);
    CHECK(r.stable);
  }
}

TEST_CASE("two-group offspring map: preimage of the interior target has two sheets") {
  MapSpec f = make_builtin("builtin:hw_sexed?k=2");
  const std::vector<double> target = {3.0 / 16.0, 5.0 / 8.0, 3.0 / 16.0, 5.0 / 8.0};
  ComponentReport r = preimage_components(f, target, GridWindow::cube(-1, 2, 4, 60));
  REQUIRE(r.count == 2);
  CHECK(r.stable);
  CHECK(r.doubled_count == 2);
  REQUIRE(r.doubled_resolution == std::vector<int>{80, 80, 80, 80});
  // the sheets live on {u = 1/4, v = 3/4} and {u = 3/4, v = 1/4}, where
  // u and v are the first-group frequencies of the two blocks
  REQUIRE(r.representatives.size() == 2);
  const auto u = [](const std::vector<double>& z) { return z[0] + 0.5 * z[1]; };
  const auto v = [](const std::vector<double>& z) { return z[2] + 0.5 * z[3]; };
  // representatives are first-swept cells, which sit on the fringe of the
  // band where the sheets clip the window, so only coarse proximity holds
  CHECK(std::fabs(u(r.representatives[0]) - 0.25) < 0.2);
  CHECK(std::fabs(v(r.representatives[0]) - 0.75) < 0.2);
  CHECK(std::fabs(u(r.representatives[1]) - 0.75) < 0.2);
  CHECK(std::fabs(v(r.representatives[1]) - 0.25) < 0.2);
  CHECK(u(r.representatives[0]) < 0.5);
  CHECK(u(r.representatives[1]) > 0.5);
  CHECK(v(r.representatives[0]) > 0.5);
  CHECK(v(r.representatives[1]) < 0.5);
  CHECK(r.representatives[0][0] < r.representatives[1][0]);
}

TEST_CASE("branch counts around level-set points") {
  // transversal crossing of two curves: four sign changes, two branches
  MapSpec family1 = make_builtin("builtin:poly_family?i=1");
  CHECK(local_branch_count(family1.components()[0], {0.0, 1.0}, 0.1) == 2);

  // regular points carry a single branch
  CHECK(local_branch_count(expr2("x + y*x^2"), {0.0, 5.0}, 0.1) == 1);
  CHECK(local_branch_count(expr2("x"), {0.0, 0.0}, 0.1) == 1);

  // every lattice point (0, j), j <= i, is a double point of family i
  for (int i = 1; i <= 3; ++i) {
    MapSpec fam = make_builtin("builtin:poly_family?i=" + std::to_string(i));
    for (int j = 1; j <= i; ++j) {
      INFO("family " << i << " at (0, " << j << ")");
      CHECK(local_branch_count(fam.components()[0], {0.0, double(j)}, 0.1) == 2);
    }
  }

  CHECK_THROWS_AS(local_branch_count(expr2("x + y*x^2"), {1.0, 1.0}, 0.1), ObstructionError);
  CHECK_THROWS_AS(local_branch_count(expr2("x"), {0.0, 0.0}, 0.0), ObstructionError);
}

TEST_CASE("gradient zeros of the crossing-line families sit at the double points") {
  for (int i : {1, 2, 3}) {
    MapSpec fam = make_builtin("builtin:poly_family?i=" + std::to_string(i));
    const Expression& g = fam.components()[0];
    auto cells = gradient_vanish_scan(g, GridWindow::cube(-5, 5, 2, 100), 1e-6);
    INFO("family index " << i);
    REQUIRE(static_cast<int>(cells.size()) == i);
    for (int j = 1; j <= i; ++j) {
      const VanishCell& c = cells[j - 1];
      CHECK(c.grad_norm <= 1e-6);
      CHECK(std::fabs(c.refined[0]) < 1e-3);
      CHECK(std::fabs(c.refined[1] - j) < 1e-3);
      // consistency: the function itself nearly vanishes there
      std::vector<double> z = c.refined;
      CHECK(std::fabs(eval(g, std::span<const double>(z))) <= 1e-5);
    }
  }
}

TEST_CASE("maps without critical points scan empty") {
  auto cells = gradient_vanish_scan(expr2("x + y*x^2"), GridWindow::cube(-5, 5, 2, 100), 1e-6);
  CHECK(cells.empty());
}

TEST_CASE("fixed-point loci") {
  // offspring map: fixed points form the image curve (p^2, 2p(1-p))
  ComponentReport hw =
      fixed_point_sample(make_builtin("builtin:hw_simple?k=2"), GridWindow::cube(0, 1, 2, 100));
  CHECK(hw.count == 1);
  CHECK(hw.stable);

  // (x + y*x^2, 0): fixed points are exactly the x-axis
  ComponentReport ax = fixed_point_sample(map2("x + y*x^2", "0"), GridWindow::cube(-3, 3, 2, 200));
  CHECK(ax.count == 1);
  CHECK(ax.stable);

  // -id: a single fixed point at the origin
  ComponentReport neg =
      fixed_point_sample(make_builtin("builtin:jordan?blocks=-1,-1"), GridWindow::cube(-5, 5, 2, 100));
  REQUIRE(neg.count == 1);
  CHECK(neg.stable);
  CHECK(std::fabs(neg.representatives[0][0]) <= 0.1);
  CHECK(std::fabs(neg.representatives[0][1]) <= 0.1);

  // identity: every cell is fixed, one component
  auto vars = make_vars({"x", "y"});
  ComponentReport all = fixed_point_sample(identity_map(vars), GridWindow::cube(0, 1, 2, 16));
  CHECK(all.marked == 256);
  CHECK(all.count == 1);
}

TEST_CASE("for an idempotent map the fixed locus covers sampled image cells") {
  MapSpec f = make_builtin("builtin:hw_simple?k=2");
  GridWindow gw = GridWindow::cube(0, 1, 2, 100);
  std::vector<std::vector<double>> marked;
  ComponentReport r = fixed_point_sample(f, gw, 1.0, &marked);
  REQUIRE(r.count == 1);

  std::set<std::pair<int, int>> cells;
  const double h = gw.cell_size(0);
  for (const auto& c : marked)
    cells.emplace(static_cast<int>(std::lround((c[0] - 0.0) / h - 0.5)),
                  static_cast<int>(std::lround((c[1] - 0.0) / h - 0.5)));

  int checked = 0;
  for (const auto& w : sample_window(Window::cube(0.0, 1.0, 2), 200)) {
    std::vector<double> z = f.apply(w);
    if (z[0] <= 0.0 || z[0] >= 1.0 || z[1] <= 0.0 || z[1] >= 1.0) continue;
    ++checked;
    auto cell = std::pair<int, int>(static_cast<int>(z[0] / h), static_cast<int>(z[1] / h));
    INFO("image point (" << z[0] << ", " << z[1] << ")");
    CHECK(cells.count(cell) == 1);
  }
  CHECK(checked > 50);
}
