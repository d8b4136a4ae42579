// babbage: analyze self-maps of R^m that satisfy an iterate identity
// f^n = f^k. Subcommands dispatch into the header-only library and print
// one JSON report to standard output, written once at completion.
//
// Exit codes: 0 the checked property holds, 1 the analysis ran and the
// property fails (a refutation is a successful run), 2 usage/input error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "babbage/babbage.hpp"

namespace {

using namespace babbage;
using Clock = std::chrono::steady_clock;

struct CommonOpts {
  std::string map_path;
  std::string window_text;
  double tol = -1.0;        // negative: keep the file's / library default
  int samples = -1;
  long long seed = -1;
  bool exact = false;
};

void add_map_options(CLI::App* cmd, CommonOpts& o, bool needs_map = true) {
  auto* m = cmd->add_option("--map", o.map_path, "map-spec file (JSON)");
  if (needs_map) m->required();
  cmd->add_option("--window", o.window_text,
                  "analysis window, one lo:hi range per axis, comma separated");
  cmd->add_option("--tol", o.tol, "numeric tolerance");
  cmd->add_option("--samples", o.samples, "sample count");
  cmd->add_option("--seed", o.seed, "sampler seed");
  cmd->add_flag("--exact", o.exact, "require the exact polynomial route");
}

Window parse_window_text(const std::string& text) {
  Window w;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const size_t colon = part.find(':');
    if (colon == std::string::npos)
      throw SpecFileError("window axis '" + part + "' is not lo:hi");
    double lo = 0.0, hi = 0.0;
    try {
      lo = std::stod(part.substr(0, colon));
      hi = std::stod(part.substr(colon + 1));
    } catch (const std::exception&) {
      throw SpecFileError("window axis '" + part + "' is not numeric");
    }
    if (!(lo < hi)) throw SpecFileError("window axis '" + part + "' is empty or reversed");
    w.axes.push_back({lo, hi});
  }
  if (w.axes.empty()) throw SpecFileError("empty window");
  return w;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw SpecFileError(std::string(what) + " entry '" + part + "' is not numeric");
    }
  }
  if (out.empty()) throw SpecFileError(std::string("empty ") + what);
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  for (double v : parse_double_list(text, what)) out.push_back(static_cast<int>(v));
  return out;
}

struct Ctx {
  LoadedMap lm;
  Window window;
};

// Load the map, apply CLI overrides, pick the analysis window.
Ctx load_ctx(const CommonOpts& o, int expect_dim = -1) {
  LoadedMap lm = parse_mapspec(o.map_path);
  if (o.tol >= 0.0) {
    if (!(o.tol > 0.0)) throw SpecFileError("--tol must be positive");
    lm.params.tol = o.tol;
  }
  if (o.samples >= 0) {
    if (o.samples < 1) throw SpecFileError("--samples must be positive");
    lm.params.samples = o.samples;
  }
  if (o.seed >= 0) lm.params.seed = static_cast<uint64_t>(o.seed);
  if (expect_dim > 0 && lm.map.dim() != expect_dim)
    throw SpecFileError(o.map_path + ": this subcommand needs a " +
                        std::to_string(expect_dim) + "D map, got " +
                        std::to_string(lm.map.dim()) + "D");
  std::optional<Window> override_w;
  if (!o.window_text.empty()) {
    Window w = parse_window_text(o.window_text);
    if (w.dim() == 1 && lm.map.dim() > 1)
      w.axes.assign(static_cast<size_t>(lm.map.dim()), w.axes[0]);
    if (w.dim() != lm.map.dim())
      throw SpecFileError("--window has " + std::to_string(w.dim()) + " axes for a " +
                          std::to_string(lm.map.dim()) + "D map");
    override_w = std::move(w);
  }
  if (o.exact && !detail::exact_route_available(lm.map))
    throw SpecFileError(
        "--exact requires polynomial components with rational constants");
  Window w = effective_window(lm.map, override_w);
  return Ctx{std::move(lm), std::move(w)};
}

GridWindow make_grid(const Window& w, const std::string& cells_text) {
  GridWindow gw;
  gw.axes = w.axes;
  std::vector<int> cells = parse_int_list(cells_text, "--cells");
  if (cells.size() == 1) cells.assign(w.axes.size(), cells[0]);
  if (cells.size() != w.axes.size())
    throw SpecFileError("--cells needs one count per axis (or a single shared count)");
  gw.cells = std::move(cells);
  return gw;
}

std::string join_args(int argc, char** argv) {
  std::string s = "babbage";
  for (int i = 1; i < argc; ++i) {
    s += ' ';
    s += argv[i];
  }
  return s;
}

// Single atomic write of the finished report.
int emit(ordered_json env, ordered_json payload, bool holds, Clock::time_point t0) {
  env["result"] = std::move(payload);
  env["duration_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
  std::string text = env.dump(2);
  text += '\n';
  std::fwrite(text.data(), 1, text.size(), stdout);
  std::fflush(stdout);
  return holds ? 0 : 1;
}

void write_marked_csv(const std::string& path, const std::vector<std::string>& vars,
                      const std::vector<std::vector<double>>& marked) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SpecFileError(path + ": cannot open for writing");
  for (size_t a = 0; a < vars.size(); ++a) out << (a ? "," : "") << vars[a];
  out << '\n';
  out.precision(17);
  for (const auto& row : marked) {
    for (size_t a = 0; a < row.size(); ++a) out << (a ? "," : "") << row[a];
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analyze self-maps satisfying iterate identities f^n = f^k"};
  app.require_subcommand(1);
  const std::string command_echo = join_args(argc, argv);

  // ---- check ------------------------------------------------------------
  CommonOpts check_o;
  int check_n = -1, check_k = -1, check_nmax = 6;
  bool check_detect = false;
  CLI::App* check = app.add_subcommand(
      "check", "verify f^n = f^k for a given pair, or detect the minimal pair");
  add_map_options(check, check_o);
  check->add_option("--n", check_n, "outer power");
  check->add_option("--k", check_k, "inner power");
  check->add_flag("--detect", check_detect, "scan for the minimal pair");
  check->add_option("--nmax", check_nmax, "detection bound on n")->check(CLI::Range(2, 64));

  // ---- image-chain --------------------------------------------------------
  CommonOpts chain_o;
  int chain_depth = 3, chain_resolution = 512;
  CLI::App* chain = app.add_subcommand(
      "image-chain", "1D decreasing enclosures I, f(I) cap I, f^2(I) cap ..., depth k");
  add_map_options(chain, chain_o);
  chain->add_option("--k", chain_depth, "chain depth")->check(CLI::Range(1, 64));
  chain->add_option("--resolution", chain_resolution, "samples per enclosure")
      ->check(CLI::Range(16, 1 << 20));

  // ---- linearize ----------------------------------------------------------
  CLI::App* lin = app.add_subcommand("linearize", "construct and verify conjugacies");
  lin->require_subcommand(1);

  CommonOpts inv_o;
  CLI::App* lin_inv = lin->add_subcommand(
      "involution", "1D involution: phi = id - f conjugates f to -id");
  add_map_options(lin_inv, inv_o);

  CommonOpts nf_o;
  CLI::App* lin_nf = lin->add_subcommand(
      "normal-form", "2D factor form g = sign*x + y*q(x,y) with quadrature q");
  add_map_options(lin_nf, nf_o);

  CommonOpts proj_o;
  CLI::App* lin_proj = lin->add_subcommand(
      "projection", "2D conjugacy (g, y) onto the projection (x, 0)");
  add_map_options(lin_proj, proj_o);

  std::string strip_h, strip_range = "-1:1";
  int strip_samples = 256;
  CLI::App* lin_strip = lin->add_subcommand(
      "strip", "map the strip |y| < h(x) onto the plane by a fiberwise tangent");
  lin_strip->add_option("--height", strip_h, "strictly positive height expression in x")
      ->required();
  lin_strip->add_option("--window-x", strip_range, "x range lo:hi");
  lin_strip->add_option("--samples", strip_samples, "verification samples")
      ->check(CLI::Range(64, 1 << 20));

  int hw_k = 2;
  std::string hw_variant = "simple";
  CLI::App* lin_hw = lin->add_subcommand(
      "hw", "genotype-dynamics conjugacy to a projection normal form");
  lin_hw->add_option("--k", hw_k, "allele count")->check(CLI::Range(2, 8));
  lin_hw->add_option("--variant", hw_variant, "simple | sexed")
      ->check(CLI::IsMember({"simple", "sexed"}));

  // ---- obstruct -------------------------------------------------------------
  CLI::App* obs = app.add_subcommand("obstruct", "grid probes for conjugacy obstructions");
  obs->require_subcommand(1);

  CommonOpts comp_o;
  std::string comp_target, comp_cells = "100", comp_csv;
  double comp_factor = 0.75;
  CLI::App* obs_comp = obs->add_subcommand(
      "components", "connected components of the preimage of a target point");
  add_map_options(obs_comp, comp_o);
  obs_comp->add_option("--target", comp_target, "target point, comma separated")->required();
  obs_comp->add_option("--cells", comp_cells, "grid cells per axis");
  obs_comp->add_option("--mark-factor", comp_factor, "gradient-scaled marking factor");
  obs_comp->add_option("--csv", comp_csv, "dump marked cell centers to a CSV file");

  CommonOpts br_o;
  std::string br_point;
  double br_radius = 0.1, br_on_tol = 1e-6;
  int br_samples = 360;
  CLI::App* obs_br = obs->add_subcommand(
      "branches", "level-set branches of the first component through a point");
  add_map_options(obs_br, br_o);
  obs_br->add_option("--point", br_point, "probe point x,y")->required();
  obs_br->add_option("--radius", br_radius, "probe circle radius");
  obs_br->add_option("--circle-samples", br_samples, "samples on the circle")
      ->check(CLI::Range(8, 1 << 16));
  obs_br->add_option("--on-tol", br_on_tol, "how close g(point) must be to zero");

  CommonOpts gz_o;
  std::string gz_cells = "100";
  CLI::App* obs_gz = obs->add_subcommand(
      "gradzero", "cells where the gradient of the first component vanishes");
  add_map_options(obs_gz, gz_o);
  obs_gz->add_option("--cells", gz_cells, "grid cells per axis");

  CommonOpts fx_o;
  std::string fx_cells = "100", fx_csv;
  double fx_factor = 0.75;
  CLI::App* obs_fx = obs->add_subcommand(
      "fixed", "connected components of the fixed-point locus");
  add_map_options(obs_fx, fx_o);
  obs_fx->add_option("--cells", fx_cells, "grid cells per axis");
  obs_fx->add_option("--mark-factor", fx_factor, "gradient-scaled marking factor");
  obs_fx->add_option("--csv", fx_csv, "dump marked cell centers to a CSV file");

  // ---- report -----------------------------------------------------------------
  std::string report_in;
  CLI::App* rep = app.add_subcommand("report", "pretty-print a stored report");
  rep->add_option("--in", report_in, "report JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints help to stdout for --help; everything else is usage
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const Clock::time_point t0 = Clock::now();
  try {
    if (check->parsed()) {
      const bool pair_given = check_n >= 0 || check_k >= 0;
      if (pair_given == check_detect)
        throw SpecFileError("pass either --n and --k, or --detect");
      Ctx ctx = load_ctx(check_o);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      if (check_detect) {
        DetectResult det =
            detect_minimal_pair(ctx.lm.map, check_nmax, ctx.window, ctx.lm.params);
        ordered_json payload = report_json(det);
        payload["window"] = report_json(ctx.window);
        if (det.found) {
          IdempotentResult h = idempotent_power(ctx.lm.map, det.pair.n, det.pair.k,
                                                ctx.window, ctx.lm.params);
          payload["idempotent_power"] = report_json(h);
        }
        return emit(std::move(env), std::move(payload), det.found, t0);
      }
      if (check_n < 2 || check_k < 0 || check_n <= check_k)
        throw SpecFileError("need --n > --k >= 0 with --n >= 2");
      CheckResult res = check_pair(ctx.lm.map, check_n, check_k, ctx.window, ctx.lm.params);
      ordered_json payload = report_json(res, check_n, check_k);
      payload["window"] = report_json(ctx.window);
      if (res.holds)
        payload["label"] =
            classify_label(ctx.lm.map, check_n, check_k, ctx.window, ctx.lm.params);
      return emit(std::move(env), std::move(payload), res.holds, t0);
    }

    if (chain->parsed()) {
      Ctx ctx = load_ctx(chain_o, 1);
      Interval1 I{ctx.window.axes[0][0], ctx.window.axes[0][1], true, true};
      ChainResult res = image_chain(ctx.lm.map, I, chain_depth, chain_resolution);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      ordered_json payload = report_json(res);
      payload["resolution"] = chain_resolution;
      return emit(std::move(env), std::move(payload), true, t0);
    }

    if (lin_inv->parsed()) {
      Ctx ctx = load_ctx(inv_o, 1);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      try {
        ConjugacyReport r = involution_conjugacy(ctx.lm.map, ctx.window, ctx.lm.params);
        return emit(std::move(env), report_json(r), r.verified, t0);
      } catch (const LinearizeError& e) {
        ordered_json payload;
        payload["verified"] = false;
        payload["detail"] = e.what();
        return emit(std::move(env), std::move(payload), false, t0);
      }
    }

    if (lin_nf->parsed()) {
      Ctx ctx = load_ctx(nf_o, 2);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      try {
        NormalForm2D r = normal_form_residual(ctx.lm.map, ctx.window, ctx.lm.params);
        const bool holds = r.hypotheses_ok() && r.residual <= std::max(ctx.lm.params.tol, 1e-10);
        ordered_json payload = report_json(r);
        payload["window"] = report_json(ctx.window);
        return emit(std::move(env), std::move(payload), holds, t0);
      } catch (const LinearizeError& e) {
        ordered_json payload;
        payload["hypotheses_ok"] = false;
        payload["detail"] = e.what();
        return emit(std::move(env), std::move(payload), false, t0);
      }
    }

    if (lin_proj->parsed()) {
      Ctx ctx = load_ctx(proj_o, 2);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      ProjectionReport r = projection_conjugacy(ctx.lm.map, ctx.window, ctx.lm.params);
      ordered_json payload = report_json(r);
      payload["window"] = report_json(ctx.window);
      return emit(std::move(env), std::move(payload), r.hypothesis_ok && r.conj.verified, t0);
    }

    if (lin_strip->parsed()) {
      Window xr = parse_window_text(strip_range);
      if (xr.dim() != 1) throw SpecFileError("--window-x takes a single lo:hi range");
      auto vars = make_vars({"x"});
      Expression h = parse_expression(strip_h, vars);
      ordered_json env = envelope(command_echo, detail::fnv1a_digest(strip_h),
                                  AnalysisParams{});
      try {
        StripReport r =
            strip_to_plane(h, xr.axes[0][0], xr.axes[0][1], strip_samples);
        return emit(std::move(env), report_json(r), r.verified, t0);
      } catch (const LinearizeError& e) {
        ordered_json payload;
        payload["verified"] = false;
        payload["detail"] = e.what();
        return emit(std::move(env), std::move(payload), false, t0);
      }
    }

    if (lin_hw->parsed()) {
      ordered_json env = envelope(
          command_echo, detail::fnv1a_digest(hw_variant + "?k=" + std::to_string(hw_k)),
          AnalysisParams{});
      ConjugacyReport r = hw_conjugacy(hw_k, hw_variant);
      return emit(std::move(env), report_json(r), r.verified, t0);
    }

    if (obs_comp->parsed()) {
      Ctx ctx = load_ctx(comp_o);
      GridWindow gw = make_grid(ctx.window, comp_cells);
      std::vector<double> target = parse_double_list(comp_target, "--target");
      std::vector<std::vector<double>> marked;
      ComponentReport r = preimage_components(ctx.lm.map, target, gw, comp_factor,
                                              comp_csv.empty() ? nullptr : &marked);
      if (!comp_csv.empty()) write_marked_csv(comp_csv, *ctx.lm.map.vars(), marked);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      ordered_json payload = report_json(r);
      payload["target"] = target;
      payload["window"] = report_json(ctx.window);
      return emit(std::move(env), std::move(payload), true, t0);
    }

    if (obs_br->parsed()) {
      Ctx ctx = load_ctx(br_o, 2);
      std::vector<double> point = parse_double_list(br_point, "--point");
      if (point.size() != 2) throw SpecFileError("--point needs exactly x,y");
      int branches = local_branch_count(ctx.lm.map.components()[0], point, br_radius,
                                        br_samples, br_on_tol);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      ordered_json payload;
      payload["point"] = point;
      payload["radius"] = br_radius;
      payload["circle_samples"] = br_samples;
      payload["branches"] = branches;
      return emit(std::move(env), std::move(payload), true, t0);
    }

    if (obs_gz->parsed()) {
      Ctx ctx = load_ctx(gz_o, 2);
      GridWindow gw = make_grid(ctx.window, gz_cells);
      const double tol = gz_o.tol >= 0.0 ? gz_o.tol : 1e-6;
      auto cells = gradient_vanish_scan(ctx.lm.map.components()[0], gw, tol);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      ordered_json payload;
      payload["tol"] = tol;
      payload["window"] = report_json(ctx.window);
      payload["cells"] = report_json(cells);
      payload["count"] = cells.size();
      return emit(std::move(env), std::move(payload), true, t0);
    }

    if (obs_fx->parsed()) {
      Ctx ctx = load_ctx(fx_o);
      GridWindow gw = make_grid(ctx.window, fx_cells);
      std::vector<std::vector<double>> marked;
      ComponentReport r =
          fixed_point_sample(ctx.lm.map, gw, fx_factor, fx_csv.empty() ? nullptr : &marked);
      if (!fx_csv.empty()) write_marked_csv(fx_csv, *ctx.lm.map.vars(), marked);
      ordered_json env = envelope(command_echo, ctx.lm.digest, ctx.lm.params);
      ordered_json payload = report_json(r);
      payload["window"] = report_json(ctx.window);
      return emit(std::move(env), std::move(payload), true, t0);
    }

    if (rep->parsed()) {
      std::ifstream in(report_in, std::ios::binary);
      if (!in) throw SpecFileError(report_in + ": cannot open file");
      nlohmann::ordered_json doc;
      try {
        in >> doc;
      } catch (const nlohmann::json::parse_error& e) {
        throw SpecFileError(report_in + ": not a JSON report: " + e.what());
      }
      std::string text = doc.dump(2);
      text += '\n';
      std::fwrite(text.data(), 1, text.size(), stdout);
      return 0;
    }

    throw SpecFileError("no subcommand dispatched");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "babbage: %s\n", e.what());
    return 2;
  }
}
