#pragma once

// JSON report serialization. Every analysis result type gets a
// `report_json` overload; the CLI wraps one payload in `envelope`, which
// echoes the command line, the input digest, the tool version, and the
// analysis defaults so published numbers can be reproduced. Key order is
// fixed (ordered_json) and doubles print shortest-round-trip, so identical
// inputs serialize byte-identically; the wall-clock duration is the one
// field excluded from that guarantee.

#include <string>
#include <vector>

#include <json.hpp>

#include "babbage/equation.hpp"
#include "babbage/interval.hpp"
#include "babbage/linear_check.hpp"
#include "babbage/linearize.hpp"
#include "babbage/map_spec.hpp"
#include "babbage/obstruction.hpp"
#include "babbage/sampling.hpp"

namespace babbage {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "babbage 0.1.0";

inline ordered_json report_json(const Window& w) {
  ordered_json axes = ordered_json::array();
  for (const auto& a : w.axes) axes.push_back({a[0], a[1]});
  return axes;
}

inline ordered_json report_json(const MapSpec& f) {
  ordered_json j;
  if (!f.builtin_tag().empty()) j["builtin"] = f.builtin_tag();
  j["vars"] = *f.vars();
  ordered_json comps = ordered_json::array();
  for (const Expression& c : f.components()) comps.push_back(print_expression(c));
  j["components"] = comps;
  if (f.window()) j["window"] = report_json(*f.window());
  return j;
}

inline ordered_json report_json(const Polynomial& p) {
  ordered_json terms = ordered_json::array();
  for (const auto& [exps, coeff] : p.terms()) {
    ordered_json t;
    t["exps"] = exps;
    t["coeff"] = rational_to_string(coeff);
    terms.push_back(std::move(t));
  }
  return terms;
}

inline ordered_json report_json(const Interval1& iv) {
  ordered_json j;
  j["lo"] = iv.lo;
  j["hi"] = iv.hi;
  j["lo_closed"] = iv.lo_closed;
  j["hi_closed"] = iv.hi_closed;
  return j;
}

// ---- equation checking --------------------------------------------------------

inline ordered_json report_json(const EquivalenceResult& r) {
  ordered_json j;
  j["equal"] = r.equal;
  j["mode"] = r.exact ? "exact" : "sampled";
  j["deviation"] = r.deviation;
  if (!r.witness.empty()) j["witness"] = r.witness;
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

inline ordered_json report_json(const CheckResult& r, int n, int k) {
  ordered_json j;
  j["n"] = n;
  j["k"] = k;
  j["holds"] = r.holds;
  j["mode"] = r.exact ? "exact" : "sampled";
  j["deviation"] = r.deviation;
  if (!r.witness.empty()) j["witness"] = r.witness;
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

inline ordered_json report_json(const DetectResult& r) {
  ordered_json j;
  j["found"] = r.found;
  if (r.found) {
    j["n"] = r.pair.n;
    j["k"] = r.pair.k;
    j["label"] = r.label;
  }
  j["mode"] = r.exact ? "exact" : "sampled";
  j["deviation"] = r.deviation;
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

inline ordered_json report_json(const IdempotentResult& r) {
  ordered_json j;
  j["power"] = r.power;
  j["idempotent"] = r.idempotent;
  j["mode"] = r.exact ? "exact" : "sampled";
  j["deviation"] = r.deviation;
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

inline ordered_json report_json(const RestrictionResult& r) {
  ordered_json j;
  j["invariant"] = r.invariant;
  j["kind"] = r.kind;
  j["deviation"] = r.deviation;
  j["witness"] = r.witness;
  return j;
}

// ---- 1D enclosures and chains -------------------------------------------------

inline ordered_json report_json(const ChainResult& r) {
  ordered_json levels = ordered_json::array();
  for (const ChainLevel& l : r.levels) {
    ordered_json jl;
    jl["empty"] = l.empty;
    if (!l.empty) {
      jl["box"] = report_json(l.box);
      jl["slack"] = l.slack;
    }
    levels.push_back(std::move(jl));
  }
  ordered_json j;
  j["levels"] = levels;
  j["monotone"] = r.monotone;
  return j;
}

inline ordered_json report_json(const Verify1DResult& r) {
  ordered_json j;
  j["requested"] = {{"n", r.requested.n}, {"k", r.requested.k}};
  j["reduced"] = {{"n", r.reduced.n}, {"k", r.reduced.k}};
  j["holds"] = r.holds;
  j["reduced_holds"] = r.reduced_holds;
  j["deviation"] = r.deviation;
  j["witness"] = r.witness;
  j["chain"] = report_json(r.chain);
  j["restriction"] = report_json(r.restriction);
  return j;
}

// ---- conjugacy constructions ---------------------------------------------------

inline ordered_json report_json(const InjectivityScreen& s) {
  ordered_json j;
  j["min_separation"] = s.min_separation;
  j["pair_count"] = s.pair_count;
  j["points"] = s.points;
  return j;
}

inline ordered_json report_json(const ConjugacyReport& r) {
  ordered_json j;
  j["verified"] = r.verified;
  j["mode"] = r.mode;
  j["residual"] = r.residual;
  j["phi"] = report_json(r.phi);
  j["target"] = report_json(r.target);
  j["injectivity"] = report_json(r.injectivity);
  j["domain"] = r.domain;
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

inline ordered_json report_json(const NormalForm2D& r) {
  ordered_json j;
  j["sign"] = r.sign;
  j["second_zero"] = r.second_zero;
  j["axis_ok"] = r.axis_ok;
  j["hypotheses_ok"] = r.hypotheses_ok();
  j["mode"] = r.exact ? "exact" : "quadrature";
  if (r.factor_poly) j["factor"] = report_json(*r.factor_poly);
  j["residual"] = r.residual;
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

inline ordered_json report_json(const ProjectionReport& r) {
  ordered_json j;
  j["hypothesis_ok"] = r.hypothesis_ok;
  j["second_zero"] = r.second_zero;
  j["axis_ok"] = r.axis_ok;
  j["derivative_ok"] = r.derivative_ok;
  j["min_abs_dgdx"] = r.min_abs_dgdx;
  if (!r.witness.empty()) j["witness"] = r.witness;
  j["slice_monotone"] = r.slice_monotone;
  j["conjugacy"] = report_json(r.conj);
  return j;
}

inline ordered_json report_json(const StripReport& r) {
  ordered_json j;
  j["verified"] = r.verified;
  j["h_min"] = r.h_min;
  j["residual"] = r.residual;
  j["monotone"] = r.monotone;
  j["psi"] = report_json(r.psi);
  return j;
}

// ---- linear maps ----------------------------------------------------------------

inline ordered_json report_json(const LinearVerdict& r) {
  ordered_json j;
  j["linear"] = r.linear;
  j["holds"] = r.holds;
  j["holds_power"] = r.holds_power;
  j["holds_spectral"] = r.holds_spectral;
  j["agree"] = r.agree;
  j["mode"] = r.exact ? "exact" : "float";
  if (r.exact) {
    j["char_poly"] = r.char_poly;
    j["min_poly"] = r.min_poly;
    j["zero_multiplicity"] = r.zero_multiplicity;
    j["nonzero_diagonalizable"] = r.nonzero_diagonalizable;
  } else if (!r.eigenvalues.empty()) {
    ordered_json eig = ordered_json::array();
    for (const auto& z : r.eigenvalues) eig.push_back({z.real(), z.imag()});
    j["eigenvalues"] = eig;
  }
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

inline ordered_json report_json(const AffineComplexResult& r) {
  ordered_json j;
  j["kind"] = r.kind;
  if (r.kind == "rotation") {
    j["angle"] = r.angle;
    j["center"] = {r.center.real(), r.center.imag()};
  }
  j["holds"] = r.holds;
  if (r.minimal_found) j["minimal"] = {{"n", r.minimal.n}, {"k", r.minimal.k}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

// ---- grid obstructions -----------------------------------------------------------

inline ordered_json report_json(const ComponentReport& r) {
  ordered_json j;
  j["count"] = r.count;
  j["marked"] = r.marked;
  j["resolution"] = r.resolution;
  j["mark_factor"] = r.mark_factor;
  j["representatives"] = r.representatives;
  j["stable"] = r.stable;
  if (r.doubled_count >= 0) {
    j["doubled_resolution"] = r.doubled_resolution;
    j["doubled_count"] = r.doubled_count;
  }
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

inline ordered_json report_json(const std::vector<VanishCell>& cells) {
  ordered_json arr = ordered_json::array();
  for (const VanishCell& c : cells) {
    ordered_json j;
    j["cell_center"] = c.center;
    j["refined"] = c.refined;
    j["grad_norm"] = c.grad_norm;
    arr.push_back(std::move(j));
  }
  return arr;
}

// ---- envelope ---------------------------------------------------------------------

// Skeleton every subcommand fills: `result` with its payload and
// `duration_ms` last, after the payload is complete.
inline ordered_json envelope(const std::string& command, const std::string& input_digest,
                             const AnalysisParams& p) {
  ordered_json j;
  j["command"] = command;
  j["input_digest"] = input_digest;
  j["tool_version"] = kToolVersion;
  j["defaults"] = {{"tol", p.tol}, {"samples", p.samples}, {"seed", p.seed}};
  j["result"] = nullptr;
  j["duration_ms"] = nullptr;
  return j;
}

}  // namespace babbage
