// Acceptance gate: every core guarantee of the library, one line of output
// per criterion, nonzero exit when anything fails. Tolerances are pinned
// here on purpose — loosening one is a deliberate, reviewable act.

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "babbage/babbage.hpp"

#ifndef BABBAGE_CLI_PATH
#error "BABBAGE_CLI_PATH must point at the built binary"
#endif
#ifndef BABBAGE_SPECS_DIR
#error "BABBAGE_SPECS_DIR must point at the sample spec directory"
#endif

using namespace babbage;

namespace {

int failures = 0;

void criterion(const char* name, const std::function<bool(std::string&)>& fn) {
  std::string note;
  bool ok = false;
  try {
    ok = fn(note);
  } catch (const std::exception& e) {
    ok = false;
    note = std::string("exception: ") + e.what();
  }
  std::printf("%s  %-68s %s\n", ok ? "PASS" : "FAIL", name, note.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

MapSpec map1(const std::string& a, Window w) {
  auto vars = make_vars({"x"});
  return MapSpec(vars, {parse_expression(a, vars)}, std::move(w));
}

MapSpec map2(const std::string& a, const std::string& b) {
  auto vars = make_vars({"x", "y"});
  return MapSpec(vars, {parse_expression(a, vars), parse_expression(b, vars)},
                 Window::cube(-3.0, 3.0, 2));
}

Expression expr2(const std::string& body) {
  return parse_expression(body, make_vars({"x", "y"}));
}

// Random points of the genotype region: blocks of reduced simplex
// coordinates (all proportions nonnegative, each block sums to at most 1).
std::vector<std::vector<double>> simplex_points(int blocks, int full, int count,
                                                uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1e-12, 1.0);
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::vector<double> pt;
    for (int b = 0; b < blocks; ++b) {
      std::vector<double> e(static_cast<size_t>(full));
      double sum = 0.0;
      for (double& v : e) {
        v = -std::log(u(rng));
        sum += v;
      }
      for (int j = 0; j + 1 < full; ++j) pt.push_back(e[static_cast<size_t>(j)] / sum);
    }
    out.push_back(std::move(pt));
  }
  return out;
}

double sup_iterate_gap(const MapSpec& f, const std::vector<std::vector<double>>& pts,
                       int a, int b) {
  double sup = 0.0;
  for (const auto& pt : pts) {
    auto va = f.iterate(pt, a);
    auto vb = f.iterate(pt, b);
    for (size_t c = 0; c < va.size(); ++c)
      sup = std::max(sup, std::fabs(va[c] - vb[c]));
  }
  return sup;
}

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

struct CliRun {
  int exit_code = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  std::string cmd = std::string(BABBAGE_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  CliRun r;
  if (!pipe) return r;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  return r;
}

std::string strip_timing(const std::string& text) {
  std::string out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    if (line.find("duration_ms") == std::string::npos) out += line + "\n";
    pos = nl + 1;
  }
  return out;
}

char fmt_buf[160];
const char* fmt(const char* pattern, double a, double b = 0.0) {
  std::snprintf(fmt_buf, sizeof fmt_buf, pattern, a, b);
  return fmt_buf;
}

}  // namespace

int main() {
  AnalysisParams p;  // tol 1e-9, 4096 samples, seed 0

  criterion("offspring map idempotent: exact (2-3 alleles), 1e-12 sampled (4)",
            [&](std::string& note) {
              for (int k : {2, 3}) {
                MapSpec f = make_builtin("builtin:hw_simple?k=" + std::to_string(k));
                auto r = check_pair(f, 2, 1, effective_window(f, std::nullopt), p);
                if (!r.holds || !r.exact) {
                  note = "allele count " + std::to_string(k) + " not exactly idempotent";
                  return false;
                }
              }
              MapSpec f4 = make_builtin("builtin:hw_simple?k=4");
              auto pts = simplex_points(1, 10, 1000, 2024);
              double sup = sup_iterate_gap(f4, pts, 2, 1);
              note = fmt("sup gap %.3g over 1000 simplex points", sup);
              return sup <= 1e-12;
            });

  criterion("allele frequencies conserved exactly across one generation",
            [&](std::string&) {
              for (int k : {2, 3}) {
                MapSpec f = make_builtin("builtin:hw_simple?k=" + std::to_string(k));
                for (const Polynomial& pi : hw_freq_polys(k)) {
                  Expression before = pi.to_expression(f.vars());
                  Polynomial after = poly_canonical(compose(before, f.components()));
                  if (!(after == pi)) return false;
                }
              }
              return true;
            });

  criterion("two-sex map: f^3 = f^2 within 1e-12, f^2 != f at the witness",
            [&](std::string& note) {
              MapSpec f = make_builtin("builtin:hw_sexed?k=2");
              auto pts = simplex_points(2, 3, 1000, 515);
              double sup32 = sup_iterate_gap(f, pts, 3, 2);
              if (sup32 > 1e-12) {
                note = fmt("f^3 vs f^2 gap %.3g", sup32);
                return false;
              }
              // one fully worked rational orbit: males (1/2,1/2), females (1/3,2/3)
              std::vector<double> z{0.5, 0.5, 1.0 / 3.0, 2.0 / 3.0};
              auto f1 = f.apply(z);
              auto f2 = f.iterate(z, 2);
              const double e1[4] = {1.0 / 2, 5.0 / 12, 1.0 / 2, 5.0 / 12};
              const double e2[4] = {289.0 / 576, 238.0 / 576, 289.0 / 576, 238.0 / 576};
              double gap = 0.0;
              for (int c = 0; c < 4; ++c) {
                if (std::fabs(f1[static_cast<size_t>(c)] - e1[c]) > 1e-12) return false;
                if (std::fabs(f2[static_cast<size_t>(c)] - e2[c]) > 1e-12) return false;
                gap = std::max(gap, std::fabs(f2[static_cast<size_t>(c)] -
                                              f1[static_cast<size_t>(c)]));
              }
              note = fmt("one-step gap %.8g (= 2/576)", gap);
              return std::fabs(gap - 2.0 / 576.0) <= 1e-12;
            });

  criterion("genotype conjugacies verified: exact one-sex, 1e-12 two-sex",
            [&](std::string& note) {
              for (int k : {2, 3}) {
                auto r = hw_conjugacy(k, "simple");
                if (!r.verified || r.mode != "exact") {
                  note = "one-sex conjugacy not exact for k=" + std::to_string(k);
                  return false;
                }
              }
              auto r = hw_conjugacy(2, "sexed");
              if (!r.verified) {
                note = "two-sex conjugacy not verified";
                return false;
              }
              MapSpec f = make_builtin("builtin:hw_sexed?k=2");
              auto pts = simplex_points(2, 3, 1000, 99);
              double sup = 0.0;
              for (const auto& z : pts) {
                auto lhs = r.phi.apply(f.apply(z));
                auto rhs = r.target.apply(r.phi.apply(z));
                for (size_t c = 0; c < lhs.size(); ++c)
                  sup = std::max(sup, std::fabs(lhs[c] - rhs[c]));
              }
              note = fmt("two-sex intertwining residual %.3g on 1000 points", sup);
              return sup <= 1e-12;
            });

  criterion("image chain of the smooth plateau map: [-1,0] then {0} (1e-6)",
            [&](std::string& note) {
              MapSpec f = make_builtin("builtin:f_lambda_smooth?bits=1101");
              auto r = image_chain(f, Interval1{-10.0, 10.0, true, true}, 2, 512);
              if (r.levels.size() != 3 || r.levels[1].empty || r.levels[2].empty)
                return false;
              const Interval1& b1 = r.levels[1].box;
              const Interval1& b2 = r.levels[2].box;
              note = fmt("level1 [%.8f, %.8f]", b1.lo, b1.hi);
              return std::fabs(b1.lo + 1.0) <= 1e-6 && std::fabs(b1.hi) <= 1e-6 &&
                     std::fabs(b2.lo) <= 1e-6 && std::fabs(b2.hi) <= 1e-6;
            });

  criterion("essential-singularity collapse: minimal pair (3,2), (2,1) refuted",
            [&](std::string& note) {
              MapSpec f = make_builtin("builtin:exp_collapse");
              Window w = effective_window(f, std::nullopt);
              auto det = detect_minimal_pair(f, 4, w, p);
              if (!det.found || det.pair.n != 3 || det.pair.k != 2) {
                note = "minimal pair not (3,2)";
                return false;
              }
              auto ref = check_pair(f, 2, 1, w, p);
              note = fmt("refutation deviation %.3f", ref.deviation);
              return !ref.holds && ref.deviation >= 0.3 && ref.witness.size() == 2;
            });

  criterion("planar normal form: exact factor, quadrature agrees to 1e-10",
            [&](std::string& note) {
              struct Fix {
                const char* g;
                int sign;
                const char* factor;
              };
              const Fix fixtures[] = {{"x + y * x^2", 1, "x^2"},
                                      {"x + y^3", 1, "y^2"},
                                      {"0 - x + x * y", -1, "x"}};
              Window w = Window::cube(-3.0, 3.0, 2);
              double worst = 0.0;
              for (const Fix& fix : fixtures) {
                auto nf = normal_form_residual(map2(fix.g, "0"), w, p);
                if (!nf.hypotheses_ok() || nf.sign != fix.sign || !nf.exact ||
                    nf.residual > 1e-10) {
                  note = std::string("fixture ") + fix.g + " failed";
                  return false;
                }
                if (!(*nf.factor_poly == poly_canonical(expr2(fix.factor)))) {
                  note = std::string("wrong factor for ") + fix.g;
                  return false;
                }
                for (const auto& z : sample_window(w, 200, 3)) {
                  double quad = nf.factor(z[0], z[1]);
                  double exact = nf.factor_poly->eval(z);
                  worst = std::max(worst, std::fabs(quad - exact));
                }
              }
              note = fmt("max quadrature-vs-exact gap %.3g", worst);
              return worst <= 1e-10;
            });

  criterion("projection conjugacy: x(1+y^2) passes, x+yx^2 fails at slope 0",
            [&](std::string& note) {
              Window w = Window::cube(-3.0, 3.0, 2);
              auto ok = projection_conjugacy(map2("x * (1 + y^2)", "0"), w, p);
              if (!ok.hypothesis_ok || !ok.conj.verified || ok.conj.residual > 1e-12 ||
                  ok.min_abs_dgdx < 1.0) {
                note = "positive case failed";
                return false;
              }
              auto bad = projection_conjugacy(map2("x + y * x^2", "0"), w, p);
              if (bad.hypothesis_ok || bad.witness.size() != 2) {
                note = "negative case not rejected";
                return false;
              }
              double slope = 1.0 + 2.0 * bad.witness[0] * bad.witness[1];
              note = fmt("min slope %.3f; witness slope %.2g", ok.min_abs_dgdx, slope);
              return std::fabs(slope) <= 1e-6;
            });

  criterion("grid obstructions: 3 level-set parts, 2 preimage sheets, branches",
            [&](std::string& note) {
              auto r1 = preimage_components(map2("x + y * x^2", "0"), {0.0, 0.0},
                                            GridWindow::cube(-3.0, 3.0, 2, 600));
              if (r1.count != 3 || !r1.stable) {
                note = "level set of x + yx^2: count " + std::to_string(r1.count);
                return false;
              }
              MapSpec sexed = make_builtin("builtin:hw_sexed?k=2");
              auto r2 = preimage_components(sexed,
                                            {3.0 / 16, 5.0 / 8, 3.0 / 16, 5.0 / 8},
                                            GridWindow::cube(-1.0, 2.0, 4, 60));
              if (r2.count != 2 || !r2.stable) {
                note = "two-sex preimage: count " + std::to_string(r2.count);
                return false;
              }
              MapSpec fam1 = make_builtin("builtin:poly_family?i=1");
              int b_cross = local_branch_count(fam1.components()[0], {0.0, 1.0}, 0.1);
              int b_regular = local_branch_count(expr2("x + y * x^2"), {0.0, 5.0}, 0.1);
              auto scan = gradient_vanish_scan(expr2("x + y * x^2"),
                                               GridWindow::cube(-5.0, 5.0, 2, 100));
              note = "branches " + std::to_string(b_cross) + "/" +
                     std::to_string(b_regular) + ", gradient hits " +
                     std::to_string(scan.size());
              return b_cross == 2 && b_regular == 1 && scan.empty();
            });

  criterion("linear dual verdicts agree on 200 random block assemblies",
            [&](std::string& note) {
              std::mt19937_64 rng(0);
              auto randint = [&](int lo, int hi) {
                return static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1)) + lo;
              };
              int held = 0;
              for (int trial = 0; trial < 200; ++trial) {
                std::vector<JordanBlock> blocks;
                int nblocks = randint(1, 3);
                for (int i = 0; i < nblocks; ++i) {
                  JordanBlock b;
                  switch (randint(0, 3)) {
                    case 0: b.kind = JordanBlock::Kind::One; break;
                    case 1: b.kind = JordanBlock::Kind::MinusOne; break;
                    case 2:
                      b.kind = JordanBlock::Kind::Rot;
                      b.rot_den = randint(2, 8);
                      b.rot_num = randint(1, static_cast<int>(b.rot_den) - 1);
                      break;
                    default:
                      b.kind = JordanBlock::Kind::Nil;
                      b.nil_size = randint(1, 4);
                  }
                  blocks.push_back(b);
                }
                int n = randint(2, 10);
                int k = randint(0, n - 1);
                auto v = linear_pair_check(make_jordan(blocks), n, k);
                if (!v.linear || !v.agree || v.holds != blocks_truth(blocks, n, k)) {
                  note = "trial " + std::to_string(trial) + " disagreed: " + v.detail;
                  return false;
                }
                held += v.holds ? 1 : 0;
              }
              auto rot = linear_pair_check(make_builtin("builtin:rot_refl?angle=1/3"), 4, 1);
              auto n2_bad = linear_pair_check(make_builtin("builtin:jordan?blocks=nil:2"), 2, 1);
              auto n2_ok = linear_pair_check(make_builtin("builtin:jordan?blocks=nil:2"), 3, 2);
              note = std::to_string(held) + "/200 assemblies satisfied their pair";
              return rot.holds && rot.agree && !n2_bad.holds && n2_bad.agree &&
                     n2_ok.holds && n2_ok.agree;
            });

  criterion("iterate ladder and idempotent power for every detected fixture",
            [&](std::string& note) {
              const char* uris[] = {
                  "builtin:exp_collapse",          "builtin:exp_collapse_1d",
                  "builtin:hw_simple?k=2",         "builtin:hw_simple?k=3",
                  "builtin:hw_sexed?k=2",          "builtin:f_lambda_cont?bits=1101",
                  "builtin:f_lambda_smooth?bits=1101", "builtin:rot_refl?angle=1/3",
                  "builtin:jordan?blocks=nil:2"};
              double worst = 0.0;
              for (const char* uri : uris) {
                MapSpec f = make_builtin(uri);
                Window w = effective_window(f, std::nullopt);
                auto det = detect_minimal_pair(f, 6, w, p);
                if (!det.found) {
                  note = std::string(uri) + ": no pair detected";
                  return false;
                }
                const int n = det.pair.n, k = det.pair.k, d = n - k;
                auto pts = sample_window(w, 500, 1);
                for (int l1 = 0; l1 < 2; ++l1)
                  for (int l2 = l1 + 1; l2 <= 2; ++l2) {
                    double gap = sup_iterate_gap(f, pts, l1 * d + k, l2 * d + k);
                    worst = std::max(worst, gap);
                    if (gap > 1e-9) {
                      note = std::string(uri) + fmt(": ladder gap %.3g", gap);
                      return false;
                    }
                  }
                auto h = idempotent_power(f, n, k, w, p);
                if (!h.idempotent) {
                  note = std::string(uri) + ": power " + std::to_string(h.power) +
                         " not idempotent";
                  return false;
                }
              }
              note = fmt("worst ladder gap %.3g across 9 fixtures", worst);
              return true;
            });

  criterion("1D pairs reduce by parity to step 1 or 2; x^2 yields no pair",
            [&](std::string& note) {
              // fixture, window, a non-minimal pair known to hold
              struct Fix {
                MapSpec f;
                int n, k;
              };
              std::vector<Fix> fixtures;
              fixtures.push_back({map1("piece(x <= 0 : 0 - x ; else : x)",
                                       Window::cube(-5.0, 5.0, 1)), 4, 1});
              fixtures.push_back({map1("1 - x", Window::cube(-2.0, 3.0, 1)), 4, 0});
              fixtures.push_back({make_builtin("builtin:f_lambda_cont?bits=1101"), 3, 1});
              fixtures.push_back({make_builtin("builtin:f_lambda_smooth?bits=1101"), 5, 2});
              fixtures.push_back({make_builtin("builtin:exp_collapse_1d"), 4, 2});
              for (auto& fix : fixtures) {
                Window w = effective_window(fix.f, std::nullopt);
                Interval1 I{w.axes[0][0], w.axes[0][1], true, true};
                auto v = verify_1d_equation(fix.f, I, fix.n, fix.k, p);
                const int expect_n =
                    (fix.n - fix.k) % 2 == 1 ? fix.k + 1 : fix.k + 2;
                if (!v.holds || !v.reduced_holds || v.reduced.n != expect_n ||
                    v.reduced.k != fix.k) {
                  note = fmt("pair (%g,%g) did not reduce", fix.n, fix.k);
                  return false;
                }
              }
              MapSpec sq = map1("x^2", Window::cube(-5.0, 5.0, 1));
              auto det = detect_minimal_pair(sq, 6, effective_window(sq, std::nullopt), p);
              note = "5 fixtures reduced; squaring map found nothing";
              return !det.found;
            });

  criterion("involutions linearize exactly: phi = id - f, target -id",
            [&](std::string& note) {
              struct Fix {
                const char* body;
                Window w;
              };
              const Fix fixtures[] = {{"1 - x", Window::cube(-2.0, 3.0, 1)},
                                      {"0 - x", Window::cube(-5.0, 5.0, 1)}};
              for (const Fix& fix : fixtures) {
                auto r = involution_conjugacy(map1(fix.body, fix.w), fix.w, p);
                if (!r.verified || r.mode != "exact" || r.residual != 0.0) {
                  note = std::string(fix.body) + " not linearized exactly";
                  return false;
                }
              }
              note = "residual 0 (exact) for 1-x and -x";
              return true;
            });

  criterion("complex affine: quarter-turn rotation, translation, constant",
            [&](std::string& note) {
              using C = std::complex<double>;
              auto rot = affine_complex_classify(C(0, 1), C(0, 0), 5, 1);
              if (rot.kind != "rotation" || !rot.holds ||
                  std::fabs(rot.angle - std::numbers::pi / 2) > 1e-12 ||
                  std::abs(rot.center) > 1e-12) {
                note = "multiplier i misclassified as " + rot.kind;
                return false;
              }
              auto tr = affine_complex_classify(C(1, 0), C(1, 0), 3, 1);
              if (tr.kind != "translation-no-solution" || tr.holds) {
                note = "translation misclassified as " + tr.kind;
                return false;
              }
              auto ct = affine_complex_classify(C(0, 0), C(0.7, 0), 2, 1);
              note = "rotation pi/2 at 0; translation refused; constant (2,1)";
              return ct.kind == "constant" && ct.holds && ct.minimal_found &&
                     ct.minimal.n == 2 && ct.minimal.k == 1;
            });

  criterion("CLI reports byte-identical across repeated runs",
            [&](std::string& note) {
              const std::string specs(BABBAGE_SPECS_DIR);
              const std::string cmds[] = {
                  "check --map " + specs + "/exp_collapse.spec --detect",
                  "check --map " + specs + "/exp_collapse.spec --n 2 --k 1",
                  "linearize involution --map " + specs + "/reflect_shift.spec",
                  "image-chain --map " + specs + "/tent_smooth.spec --k 2",
                  "obstruct gradzero --map " + specs + "/poly_two_lines.spec --cells 60",
              };
              for (const std::string& cmd : cmds) {
                CliRun a = cli(cmd);
                CliRun b = cli(cmd);
                if (a.exit_code < 0 || a.exit_code > 1 || a.exit_code != b.exit_code) {
                  note = "unexpected exit running: " + cmd;
                  return false;
                }
                if (strip_timing(a.out) != strip_timing(b.out)) {
                  note = "nondeterministic output: " + cmd;
                  return false;
                }
              }
              note = "5 commands, 2 runs each";
              return true;
            });

  std::printf("%s: %d of 15 criteria failed\n", failures == 0 ? "OK" : "FAILED",
              failures);
  return failures == 0 ? 0 : 1;
}
