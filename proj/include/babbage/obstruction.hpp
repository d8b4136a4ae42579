#pragma once

// Grid probes for topological obstructions to global conjugacy: connected
// components of preimages, branch counts of plane level sets, gradient
// vanishing loci, and fixed-point loci. All sweeps are deterministic
// (fixed grids, lexicographic order), so reports are reproducible bit for
// bit. Component counting marks a cell when the field at its center is
// within a gradient-scaled tolerance of the target,
//
//     ||field(center) - target||_inf <= factor * (1 + G) * max cell size,
//
// where G is a backward-difference estimate of the local gradient
// magnitude; steep crossings widen the band so thin sheets stay connected.
// Marked cells are joined by FACE adjacency only (2*dim neighbours) --
// corner contact does not connect, which keeps transversally crossing
// curves countable (see the two-cell diagonal test).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "babbage/expression.hpp"
#include "babbage/map_spec.hpp"
#include "babbage/sampling.hpp"

namespace babbage {

class ObstructionError : public ExprError {
 public:
  using ExprError::ExprError;
};

// Rectangular window with a per-axis cell count.
struct GridWindow {
  std::vector<std::array<double, 2>> axes;
  std::vector<int> cells;

  static GridWindow cube(double lo, double hi, int dim, int cells_per_axis) {
    GridWindow g;
    g.axes.assign(static_cast<size_t>(dim), {lo, hi});
    g.cells.assign(static_cast<size_t>(dim), cells_per_axis);
    return g;
  }
  int dim() const { return static_cast<int>(axes.size()); }
  double cell_size(int a) const {
    return (axes[a][1] - axes[a][0]) / static_cast<double>(cells[a]);
  }
  double max_cell_size() const {
    double h = 0.0;
    for (int a = 0; a < dim(); ++a) h = std::max(h, cell_size(a));
    return h;
  }
  long long total_cells() const {
    long long t = 1;
    for (int c : cells) t *= c;
    return t;
  }
};

// Largest per-axis cell count we sweep at each dimension; keeps the value
// ring buffer and the full pass bounded (~40M evaluations at the 4D cap).
inline int grid_axis_cap(int dim) {
  switch (dim) {
    case 1: return 2000000;
    case 2: return 2000;
    case 3: return 300;
    case 4: return 80;
    default: return 0;
  }
}

struct ComponentReport {
  int count = 0;
  // first marked cell center of each component, sweep order
  std::vector<std::vector<double>> representatives;
  std::vector<int> resolution;
  long long marked = 0;
  double mark_factor = 0.0;
  // re-run at doubled resolution (clamped to grid_axis_cap) reproduced count
  bool stable = false;
  std::vector<int> doubled_resolution;
  int doubled_count = -1;
  std::string detail;
};

namespace detail {

struct Dsu {
  std::vector<int> parent;
  int add() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // keep the smaller id as root so each component's root is its first cell
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent[b] = a;
  }
};

inline void validate_grid(const GridWindow& gw, int expect_dim) {
  const int m = gw.dim();
  if (m < 1 || m > 4) throw ObstructionError("grid sweeps support 1 to 4 dimensions");
  if (expect_dim > 0 && m != expect_dim)
    throw ObstructionError("grid window dimension does not match the map");
  if (static_cast<int>(gw.cells.size()) != m)
    throw ObstructionError("grid window needs one cell count per axis");
  for (int a = 0; a < m; ++a) {
    if (!(gw.axes[a][0] < gw.axes[a][1]))
      throw ObstructionError("grid window axis is empty or reversed");
    if (gw.cells[a] < 8) throw ObstructionError("grid needs at least 8 cells per axis");
    if (gw.cells[a] > grid_axis_cap(m))
      throw ObstructionError("grid exceeds the per-axis cell cap for this dimension");
  }
}

struct SweepResult {
  int count = 0;
  std::vector<std::vector<double>> representatives;
  long long marked = 0;
};

// One lexicographic pass: evaluate the field at every cell center, mark
// cells within the gradient-scaled band of `target`, and union marked
// face-neighbours. A ring buffer holds the trailing hyper-rows of values
// and labels, so memory stays O(prod cells / cells[0]) instead of O(cells).
template <class Field>
SweepResult sweep_components(Field&& field, int fd, const std::vector<double>& target,
                             const GridWindow& gw, double factor,
                             const std::function<void(const std::vector<double>&)>& on_marked) {
  const int m = gw.dim();
  std::vector<long long> stride(static_cast<size_t>(m));
  stride[m - 1] = 1;
  for (int a = m - 2; a >= 0; --a) stride[a] = stride[a + 1] * gw.cells[a + 1];
  const long long total = stride[0] * gw.cells[0];
  const long long ring = stride[0] + 1;  // reaches the farthest backward neighbour

  std::vector<double> values(static_cast<size_t>(ring) * fd);
  std::vector<uint8_t> markring(static_cast<size_t>(ring), 0);
  std::vector<int> idring(static_cast<size_t>(ring), -1);

  std::vector<double> h(static_cast<size_t>(m));
  for (int a = 0; a < m; ++a) h[a] = gw.cell_size(a);
  const double hmax = *std::max_element(h.begin(), h.end());

  Dsu dsu;
  std::vector<std::vector<double>> reps;
  std::vector<int> idx(static_cast<size_t>(m), 0);
  std::vector<double> center(static_cast<size_t>(m));
  long long marked = 0;

  for (long long lin = 0; lin < total; ++lin) {
    for (int a = 0; a < m; ++a) center[a] = gw.axes[a][0] + (idx[a] + 0.5) * h[a];
    const long long pos = lin % ring;
    double* v = values.data() + pos * fd;
    field(std::span<const double>(center), std::span<double>(v, static_cast<size_t>(fd)));

    double dev = 0.0;
    for (int c = 0; c < fd; ++c) dev = std::max(dev, std::fabs(v[c] - target[c]));
    double grad = 0.0;
    for (int a = 0; a < m; ++a) {
      if (idx[a] == 0) continue;
      const long long npos = (pos - stride[a] % ring + ring) % ring;
      const double* prev = values.data() + npos * fd;
      for (int c = 0; c < fd; ++c)
        grad = std::max(grad, std::fabs(v[c] - prev[c]) / h[a]);
    }

    const bool mark = dev <= factor * (1.0 + grad) * hmax;
    markring[pos] = mark ? 1 : 0;
    if (mark) {
      ++marked;
      const int id = dsu.add();
      idring[pos] = id;
      reps.push_back(center);
      for (int a = 0; a < m; ++a) {
        if (idx[a] == 0) continue;
        const long long npos = (pos - stride[a] % ring + ring) % ring;
        if (markring[npos]) dsu.unite(id, idring[npos]);
      }
      if (on_marked) on_marked(center);
    } else {
      idring[pos] = -1;
    }

    for (int a = m - 1; a >= 0; --a) {
      if (++idx[a] < gw.cells[a]) break;
      idx[a] = 0;
    }
  }

  SweepResult r;
  r.marked = marked;
  for (int id = 0; id < static_cast<int>(dsu.parent.size()); ++id) {
    if (dsu.find(id) == id) {
      ++r.count;
      r.representatives.push_back(std::move(reps[id]));
    }
  }
  return r;
}

template <class Field>
ComponentReport component_report(Field&& field, int fd, const std::vector<double>& target,
                                 const GridWindow& gw, double factor,
                                 std::vector<std::vector<double>>* collect_marked) {
  std::function<void(const std::vector<double>&)> on_marked;
  if (collect_marked)
    on_marked = [collect_marked](const std::vector<double>& c) { collect_marked->push_back(c); };

  SweepResult first = sweep_components(field, fd, target, gw, factor, on_marked);
  ComponentReport rep;
  rep.count = first.count;
  rep.representatives = std::move(first.representatives);
  rep.resolution = gw.cells;
  rep.marked = first.marked;
  rep.mark_factor = factor;

  GridWindow fine = gw;
  bool grew = false;
  const int cap = grid_axis_cap(gw.dim());
  for (int a = 0; a < gw.dim(); ++a) {
    fine.cells[a] = std::min(2 * gw.cells[a], cap);
    if (fine.cells[a] != gw.cells[a]) grew = true;
  }
  if (grew) {
    SweepResult second = sweep_components(field, fd, target, fine, factor, nullptr);
    rep.doubled_resolution = fine.cells;
    rep.doubled_count = second.count;
    rep.stable = (second.count == rep.count);
  } else {
    rep.detail = "per-axis cell cap reached; stability not re-checked";
  }
  return rep;
}

}  // namespace detail

// Connected components (face adjacency) of the cells where f comes within
// the gradient-scaled band of `target`. Dimensions 1..4.
inline ComponentReport preimage_components(const MapSpec& f, const std::vector<double>& target,
                                           const GridWindow& gw, double mark_factor = 0.75,
                                           std::vector<std::vector<double>>* collect_marked = nullptr) {
  detail::validate_grid(gw, f.dim());
  if (static_cast<int>(target.size()) != f.dim())
    throw ObstructionError("target dimension does not match the map");
  const CompiledMap& cm = f.compiled();
  auto field = [&cm](std::span<const double> in, std::span<double> out) { cm.eval(in, out); };
  return detail::component_report(field, f.dim(), target, gw, mark_factor, collect_marked);
}

// Components of the locus f(z) = z, swept through the displacement field
// f - id with target 0.
inline ComponentReport fixed_point_sample(const MapSpec& f, const GridWindow& gw,
                                          double mark_factor = 0.75,
                                          std::vector<std::vector<double>>* collect_marked = nullptr) {
  detail::validate_grid(gw, f.dim());
  const CompiledMap& cm = f.compiled();
  auto field = [&cm](std::span<const double> in, std::span<double> out) {
    cm.eval(in, out);
    for (size_t a = 0; a < in.size(); ++a) out[a] -= in[a];
  };
  return detail::component_report(field, f.dim(), std::vector<double>(f.dim(), 0.0), gw,
                                  mark_factor, collect_marked);
}

// Number of level-set branches of a plane function g through `point`,
// counted as sign alternations of g around a probe circle divided by two.
// Samples that sit numerically on the level set are skipped. Errors if
// g(point) is not within `on_tol` of zero.
inline int local_branch_count(const Expression& g, const std::vector<double>& point,
                              double radius, int circle_samples = 360, double on_tol = 1e-6) {
  if (g.nvars() != 2) throw ObstructionError("branch counting works on plane functions");
  if (point.size() != 2) throw ObstructionError("branch counting needs a plane point");
  if (!(radius > 0.0)) throw ObstructionError("probe radius must be positive");
  if (circle_samples < 8) throw ObstructionError("need at least 8 circle samples");
  if (std::fabs(eval(g, std::span<const double>(point))) > on_tol)
    throw ObstructionError("point is not on the level set of g");

  std::vector<double> vals(static_cast<size_t>(circle_samples));
  double vmax = 0.0;
  for (int i = 0; i < circle_samples; ++i) {
    const double th = 2.0 * std::numbers::pi * i / circle_samples;
    const std::array<double, 2> z = {point[0] + radius * std::cos(th),
                                     point[1] + radius * std::sin(th)};
    vals[i] = eval(g, std::span<const double>(z));
    vmax = std::max(vmax, std::fabs(vals[i]));
  }
  if (vmax == 0.0) throw ObstructionError("g vanishes identically on the probe circle");

  // signs with a relative dead zone, so samples landing on a branch do not
  // flicker; a cyclic sign sequence always has an even number of changes
  const double zero_band = 1e-9 * vmax;
  std::vector<int> signs;
  for (double v : vals) {
    if (std::fabs(v) <= zero_band) continue;
    signs.push_back(v > 0.0 ? 1 : -1);
  }
  if (signs.empty()) throw ObstructionError("g vanishes identically on the probe circle");
  int changes = 0;
  for (size_t i = 0; i < signs.size(); ++i)
    if (signs[i] != signs[(i + 1) % signs.size()]) ++changes;
  return changes / 2;
}

// A cell whose refined local minimum of ||grad g||_inf is below tolerance.
struct VanishCell {
  std::vector<double> center;   // center of the triggering cell (cluster seed)
  std::vector<double> refined;  // minimizer found inside the cell
  double grad_norm = 0.0;       // ||grad g(refined)||_inf
};

// Scan for gradient zeros: grid cells inside the gradient-scaled band of
// grad g = 0 are refined once by compass minimization of ||grad g||_inf
// over the cell; survivors below `tol` are clustered by proximity
// (within 1.5 cells) and one representative per cluster is returned.
inline std::vector<VanishCell> gradient_vanish_scan(const Expression& g, const GridWindow& gw,
                                                    double tol = 1e-6,
                                                    double mark_factor = 0.75) {
  detail::validate_grid(gw, g.nvars());
  const int m = g.nvars();

  // gradient field: symbolic when g is smooth, central differences otherwise
  std::function<void(std::span<const double>, std::span<double>)> grad_field;
  std::shared_ptr<CompiledMap> cg;
  std::shared_ptr<CompiledMap> cgrad;
  try {
    cgrad = std::make_shared<CompiledMap>(grad_symbolic(g));
    grad_field = [cgrad](std::span<const double> in, std::span<double> out) {
      cgrad->eval(in, out);
    };
  } catch (const ExprError&) {
    cg = std::make_shared<CompiledMap>(std::vector<Expression>{g});
    grad_field = [cg, m](std::span<const double> in, std::span<double> out) {
      const double step = 1e-6;
      std::vector<double> z(in.begin(), in.end());
      double lo = 0.0, hi = 0.0;
      for (int a = 0; a < m; ++a) {
        const double save = z[a];
        z[a] = save + step;
        cg->eval(z, std::span<double>(&hi, 1));
        z[a] = save - step;
        cg->eval(z, std::span<double>(&lo, 1));
        z[a] = save;
        out[a] = (hi - lo) / (2.0 * step);
      }
    };
  }

  std::vector<std::vector<double>> candidates;
  detail::sweep_components(
      grad_field, m, std::vector<double>(static_cast<size_t>(m), 0.0), gw, mark_factor,
      [&candidates](const std::vector<double>& c) { candidates.push_back(c); });

  auto grad_inf = [&](const std::vector<double>& z) {
    std::vector<double> gv(static_cast<size_t>(m));
    grad_field(std::span<const double>(z), std::span<double>(gv));
    double n = 0.0;
    for (double c : gv) n = std::max(n, std::fabs(c));
    return n;
  };

  std::vector<double> h(static_cast<size_t>(m));
  for (int a = 0; a < m; ++a) h[a] = gw.cell_size(a);
  const double hmax = gw.max_cell_size();

  std::vector<VanishCell> clusters;
  for (const std::vector<double>& c : candidates) {
    Window cell;
    cell.axes.resize(static_cast<size_t>(m));
    for (int a = 0; a < m; ++a) cell.axes[a] = {c[a] - 0.5 * h[a], c[a] + 0.5 * h[a]};
    std::vector<double> refined = detail::compass_minimize(grad_inf, c, hmax / 2.0, cell);
    const double gn = grad_inf(refined);
    if (gn > tol) continue;

    bool absorbed = false;
    for (VanishCell& cl : clusters) {
      double dist = 0.0;
      for (int a = 0; a < m; ++a) dist = std::max(dist, std::fabs(cl.refined[a] - refined[a]));
      if (dist <= 1.5 * hmax) {
        if (gn < cl.grad_norm) {
          cl.refined = refined;
          cl.grad_norm = gn;
        }
        absorbed = true;
        break;
      }
    }
    if (!absorbed) clusters.push_back({c, std::move(refined), gn});
  }
  return clusters;
}

}  // namespace babbage
