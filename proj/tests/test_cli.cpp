// End-to-end tests for the command-line tool: spawn the real binary, parse
// its JSON reports, and pin the exit-code contract (0 holds, 1 refuted,
// 2 usage/input error).

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#ifndef BABBAGE_CLI_PATH
#error "BABBAGE_CLI_PATH must point at the built binary"
#endif
#ifndef BABBAGE_SPECS_DIR
#error "BABBAGE_SPECS_DIR must point at the sample spec directory"
#endif

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string(BABBAGE_CLI_PATH) + " " + args;
  cmd += merge_stderr ? " 2>&1" : " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = pclose(pipe);
  RunResult r;
  r.out = std::move(out);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string spec(const char* name) {
  return std::string(BABBAGE_SPECS_DIR) + "/" + name;
}

nlohmann::json parse(const std::string& text) {
  return nlohmann::json::parse(text);
}

std::string strip_duration(const std::string& text) {
  std::string out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (line.find("duration_ms") == std::string::npos) out += line + "\n";
  return out;
}

}  // namespace

TEST_CASE("check verifies a holding pair and reports the label") {
  auto r = run("check --map " + spec("exp_collapse.spec") + " --n 3 --k 2");
  REQUIRE(r.exit_code == 0);
  auto doc = parse(r.out);
  CHECK(doc["tool_version"] == "babbage 0.1.0");
  CHECK(doc["command"].get<std::string>().rfind("babbage check", 0) == 0);
  CHECK(doc["defaults"]["samples"] == 2048);
  CHECK(doc["defaults"]["seed"] == 7);
  auto& res = doc["result"];
  CHECK(res["n"] == 3);
  CHECK(res["k"] == 2);
  CHECK(res["holds"] == true);
  CHECK(res["label"] == "eventually-periodic");
  CHECK(doc["input_digest"].get<std::string>().rfind("fnv1a:", 0) == 0);
}

TEST_CASE("check refutes a failing pair with a witness, exit 1") {
  auto r = run("check --map " + spec("exp_collapse.spec") + " --n 2 --k 1");
  REQUIRE(r.exit_code == 1);
  auto res = parse(r.out)["result"];
  CHECK(res["holds"] == false);
  CHECK(res["deviation"].get<double>() > 0.3);
  REQUIRE(res.contains("witness"));
  CHECK(res["witness"].size() == 2);
}

TEST_CASE("check --detect finds the minimal pair and its idempotent power") {
  auto r = run("check --map " + spec("exp_collapse.spec") + " --detect --nmax 4");
  REQUIRE(r.exit_code == 0);
  auto res = parse(r.out)["result"];
  CHECK(res["found"] == true);
  CHECK(res["n"] == 3);
  CHECK(res["k"] == 2);
  CHECK(res["idempotent_power"]["power"] == 2);
  CHECK(res["idempotent_power"]["idempotent"] == true);
}

TEST_CASE("check usage errors exit 2") {
  CHECK(run("check --map " + spec("exp_collapse.spec") + " --n 3").exit_code == 2);
  CHECK(run("check --map " + spec("exp_collapse.spec") + " --detect --n 3 --k 2")
            .exit_code == 2);
  CHECK(run("check --map " + spec("missing_file.spec") + " --n 3 --k 2").exit_code == 2);
  CHECK(run("check --map " + spec("exp_collapse.spec") +
            " --n 3 --k 2 --window 0:1,0:1,0:1")
            .exit_code == 2);
  CHECK(run("check --map " + spec("exp_collapse.spec") + " --n 3 --k 2 --exact")
            .exit_code == 2);  // non-polynomial components
  CHECK(run("").exit_code == 2);
}

TEST_CASE("a single --window range replicates across all axes") {
  auto r = run("check --map " + spec("exp_collapse.spec") + " --n 3 --k 2 --window -4:4");
  REQUIRE(r.exit_code == 0);
  auto w = parse(r.out)["result"]["window"];
  REQUIRE(w.size() == 2);
  for (auto& axis : w) {
    CHECK(axis[0].get<double>() == -4.0);
    CHECK(axis[1].get<double>() == 4.0);
  }
}

TEST_CASE("reports are byte-identical across runs up to timing") {
  const std::string cmd = "check --map " + spec("exp_collapse.spec") + " --detect";
  auto a = run(cmd);
  auto b = run(cmd);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(strip_duration(a.out) == strip_duration(b.out));
}

TEST_CASE("image-chain produces the decreasing enclosure chain") {
  auto r = run("image-chain --map " + spec("tent_smooth.spec") + " --k 2");
  REQUIRE(r.exit_code == 0);
  auto res = parse(r.out)["result"];
  REQUIRE(res["levels"].size() == 3);
  CHECK(res["monotone"] == true);
  auto& l1 = res["levels"][1]["box"];
  CHECK(l1["lo"].get<double>() == Catch::Approx(-1.0).margin(1e-6));
  CHECK(l1["hi"].get<double>() == Catch::Approx(0.0).margin(1e-6));
  auto& l2 = res["levels"][2]["box"];
  CHECK(l2["lo"].get<double>() == Catch::Approx(0.0).margin(1e-6));
  CHECK(l2["hi"].get<double>() == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("linearize involution conjugates an involution exactly") {
  auto r = run("linearize involution --map " + spec("reflect_shift.spec"));
  REQUIRE(r.exit_code == 0);
  auto res = parse(r.out)["result"];
  CHECK(res["verified"] == true);
  CHECK(res["mode"] == "exact");
  CHECK(res["residual"].get<double>() == 0.0);
  CHECK(res["target"]["components"][0] == "-x");
}

TEST_CASE("linearize involution rejects a non-involution with a report, exit 1") {
  auto r = run("linearize involution --map " + spec("tent_smooth.spec"));
  REQUIRE(r.exit_code == 1);
  auto res = parse(r.out)["result"];
  CHECK(res["verified"] == false);
  CHECK(res["detail"].get<std::string>().find("involution") != std::string::npos);
}

TEST_CASE("linearize normal-form extracts the exact factor") {
  auto r = run("linearize normal-form --map " + spec("shear_normal_form.spec"));
  REQUIRE(r.exit_code == 0);
  auto res = parse(r.out)["result"];
  CHECK(res["sign"] == 1);
  CHECK(res["mode"] == "exact");
  CHECK(res["residual"].get<double>() < 1e-10);
}

TEST_CASE("linearize projection verifies or refutes the slope hypothesis") {
  auto ok = run("linearize projection --map " + spec("proj_stretch.spec"));
  REQUIRE(ok.exit_code == 0);
  auto res = parse(ok.out)["result"];
  CHECK(res["hypothesis_ok"] == true);
  CHECK(res["min_abs_dgdx"].get<double>() >= 1.0);
  CHECK(res["conjugacy"]["verified"] == true);

  auto bad = run("linearize projection --map " + spec("shear_normal_form.spec"));
  REQUIRE(bad.exit_code == 1);
  auto res2 = parse(bad.out)["result"];
  CHECK(res2["derivative_ok"] == false);
  // the slope 1 + 2xy really vanishes at the reported witness
  auto w = res2["witness"];
  double slope = 1.0 + 2.0 * w[0].get<double>() * w[1].get<double>();
  CHECK(std::abs(slope) < 1e-6);
}

TEST_CASE("linearize strip and hw succeed on their reference inputs") {
  auto st = run("linearize strip --height \"1 + x^2\" --window-x -2:2");
  REQUIRE(st.exit_code == 0);
  auto res = parse(st.out)["result"];
  CHECK(res["verified"] == true);
  CHECK(res["monotone"] == true);

  auto bad = run("linearize strip --height x --window-x -1:1");
  CHECK(bad.exit_code == 1);

  for (const char* variant : {"simple", "sexed"}) {
    auto hw = run(std::string("linearize hw --variant ") + variant + " --k 2");
    REQUIRE(hw.exit_code == 0);
    auto hres = parse(hw.out)["result"];
    CHECK(hres["verified"] == true);
    CHECK(hres["mode"] == "exact");
  }
}

TEST_CASE("obstruct branches counts level-set crossings, rejects off-set points") {
  auto r = run("obstruct branches --map " + spec("poly_two_lines.spec") +
               " --point 0,1 --radius 0.1");
  REQUIRE(r.exit_code == 0);
  CHECK(parse(r.out)["result"]["branches"] == 2);

  auto off = run("obstruct branches --map " + spec("poly_two_lines.spec") +
                 " --point 1,0.5 --radius 0.1");
  CHECK(off.exit_code == 2);
}

TEST_CASE("obstruct gradzero locates the two critical points") {
  auto r = run("obstruct gradzero --map " + spec("poly_two_lines.spec") + " --cells 100");
  REQUIRE(r.exit_code == 0);
  auto res = parse(r.out)["result"];
  REQUIRE(res["count"] == 2);
  for (auto& cell : res["cells"]) {
    CHECK(std::abs(cell["refined"][0].get<double>()) < 1e-3);
    double y = cell["refined"][1].get<double>();
    CHECK(std::min(std::abs(y - 1.0), std::abs(y - 2.0)) < 1e-3);
    CHECK(cell["grad_norm"].get<double>() <= 1e-6);
  }
}

TEST_CASE("obstruct fixed marks the invariant manifold and dumps CSV") {
  const std::string csv = std::string(BABBAGE_SPECS_DIR) + "/../build/cli_marked.csv";
  auto r = run("obstruct fixed --map " + spec("hw_simple_k2.spec") +
               " --cells 50 --csv " + csv);
  REQUIRE(r.exit_code == 0);
  auto res = parse(r.out)["result"];
  CHECK(res["count"] == 1);
  CHECK(res["stable"] == true);

  std::ifstream in(csv);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "x1_1,x1_2");
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == res["marked"].get<int>());
  std::remove(csv.c_str());
}

TEST_CASE("report pretty-prints a stored report and rejects garbage") {
  auto chk = run("check --map " + spec("exp_collapse.spec") + " --n 3 --k 2");
  REQUIRE(chk.exit_code == 0);
  const std::string path = std::string(BABBAGE_SPECS_DIR) + "/../build/cli_report.json";
  {
    std::ofstream out(path, std::ios::binary);
    out << chk.out;
  }
  auto rep = run("report --in " + path);
  CHECK(rep.exit_code == 0);
  CHECK(rep.out == chk.out);

  {
    std::ofstream out(path, std::ios::binary);
    out << "not json";
  }
  CHECK(run("report --in " + path).exit_code == 2);
  std::remove(path.c_str());
}
