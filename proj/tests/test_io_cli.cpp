#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "mss/cli.hpp"
#include "mss/io.hpp"
#include "mss/presets.hpp"

using namespace mss;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mss");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mss_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

bool all_numbers_finite(const json& j) {
  if (j.is_number_float()) return std::isfinite(j.get<double>());
  if (j.is_structured()) {
    for (const auto& v : j) {
      if (!all_numbers_finite(v)) return false;
    }
  }
  return true;
}

const char* kLinearParams = R"({"A":[[0.3,-0.2],[0.1,0.4]],"b":[0.5,0.0]})";

}  // namespace

TEST_CASE("field CSV round trip is lossless") {
  const GridDomain dom(2, {-1.0, 0.1, 0.0}, {1.0, 0.7, 0.0}, {9, 7, 1});
  const VectorField f = sample_preset("random_lipschitz", {{"seed", 1}}, dom, 3);
  const std::string csv = field_to_csv(f);
  CHECK(csv.rfind("x1,x2,f1,f2,f3\n", 0) == 0);
  CHECK(csv.back() == '\n');
  const VectorField g = field_from_csv(csv);
  CHECK(g.domain() == dom);
  CHECK(std::equal(f.values().begin(), f.values().end(), g.values().begin()));
  CHECK(field_to_csv(g) == csv);
}

TEST_CASE("field CSV with diagnostic columns reloads the field") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 9);
  const VectorField f = sample_preset("holomorphic_quadratic", {}, dom, 2);
  FieldAnalysis fa;
  (void)run_audits(f, AuditConfig{}, &fa);
  const NodeDiagnostics diag = node_diagnostics(f, fa);
  const std::string csv = field_to_csv(f, &diag);
  CHECK(csv.rfind("x1,x2,f1,f2,wedge2,star_omega,lhs31,rhs31,omega1,omega2\n", 0) == 0);
  const VectorField g = field_from_csv(csv);
  CHECK(std::equal(f.values().begin(), f.values().end(), g.values().begin()));
}

TEST_CASE("malformed CSV is rejected with a parse error") {
  const auto code_of = [](const std::string& text) {
    try {
      field_from_csv(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  const GridDomain dom = GridDomain::cube(2, 0.0, 1.0, 5);
  const std::string good = field_to_csv(VectorField::zeros(dom, 1));
  CHECK(code_of("") == ErrorCode::parse);
  CHECK(code_of("a,b\n1,2\n") == ErrorCode::parse);
  CHECK(code_of("x1,x2,f1\n") == ErrorCode::parse);
  std::string bad_number = good;
  bad_number.replace(bad_number.find("\n0,0,0") + 5, 1, "z");
  CHECK(code_of(bad_number) == ErrorCode::parse);
  CHECK(code_of(good.substr(0, good.size() - 7)) == ErrorCode::parse);
  CHECK(code_of("x1,x2,f1\n0,0,0\n1,0,0\n0,1,0\n") != ErrorCode::io);
}

TEST_CASE("solve report JSON is finite and versioned") {
  const VectorField f = sample_preset("linear", json::parse(kLinearParams), GridDomain::cube(2, -1.0, 1.0, 9), 2);
  const SolveResult r = newton_solve(f, BoundaryData::from_field(f), SolveConfig{});
  const json j = to_json(r.report);
  CHECK(j.at("converged").get<bool>());
  CHECK(all_numbers_finite(j));
}

TEST_CASE("cli solve on a linear preset converges immediately with either solver") {
  const fs::path dir = scratch_dir("linear");
  for (const char* method : {"newton", "mcf"}) {
    const CliRun r = run_cli({"solve", "--preset", "linear", "--params", kLinearParams, "--method",
                              method, "--resolution", "17", "--output_dir", dir.string()});
    INFO(r.err);
    CHECK(r.code == 0);
    const json report = load_json(dir / "report.json");
    CHECK(report.at("schema") == "1");
    CHECK(report.at("solve").at("converged").get<bool>());
    CHECK(report.at("solve").at("iterations").get<int>() <= 2);
    CHECK(all_numbers_finite(report));
    CHECK(fs::exists(dir / "fields.csv"));
  }
}

TEST_CASE("cli solve on holomorphic data agrees across solvers") {
  const fs::path a = scratch_dir("hol_newton"), b = scratch_dir("hol_mcf");
  const CliRun rn = run_cli({"solve", "--preset", "holomorphic_quadratic", "--params", R"({"c":0.3})",
                             "--resolution", "17", "--output_dir", a.string()});
  const CliRun rm = run_cli({"solve", "--preset", "holomorphic_quadratic", "--params", R"({"c":0.3})",
                             "--resolution", "17", "--method", "mcf", "--perturbation", "0.1",
                             "--output_dir", b.string()});
  REQUIRE(rn.code == 0);
  REQUIRE(rm.code == 0);
  const VectorField fn = load_field_csv(a / "fields.csv");
  const VectorField fm = load_field_csv(b / "fields.csv");
  double diff = 0.0;
  for (std::size_t k = 0; k < fn.values().size(); ++k)
    diff = std::max(diff, std::abs(fn.values()[k] - fm.values()[k]));
  CHECK(diff < 1e-7);
}

TEST_CASE("cli reports configuration errors with exit code 1") {
  const fs::path dir = scratch_dir("errors");
  const CliRun coarse = run_cli({"solve", "--resolution", "3", "--output_dir", dir.string()});
  CHECK(coarse.code == 1);
  CHECK(coarse.err.find("resolution too coarse") != std::string::npos);

  const fs::path cfg = dir / "bad.json";
  std::ofstream(cfg) << R"({"preset": "zero", "colour": 3})";
  const CliRun unknown = run_cli({"solve", "--config", cfg.string()});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("colour") != std::string::npos);

  CHECK(run_cli({"solve", "--preset", "nope", "--output_dir", dir.string()}).code == 1);
  CHECK(run_cli({"solve", "--tol", "abc", "--output_dir", dir.string()}).code == 1);
  CHECK(run_cli({"solve", "--no-such-flag", "1"}).code == 1);
}

TEST_CASE("cli config file values are overridden by flags") {
  const fs::path dir = scratch_dir("override");
  const fs::path cfg = dir / "run.json";
  std::ofstream(cfg) << R"({"preset": "linear", "resolution": 3, "output_dir": "/nonexistent/x"})";
  const CliRun r = run_cli({"solve", "--config", cfg.string(), "--resolution", "9", "--output_dir",
                            dir.string()});
  CHECK(r.code == 0);
  CHECK(load_json(dir / "report.json").at("config").at("resolution") == 9);
}

TEST_CASE("cli output directory follows the environment variable") {
  const fs::path env_dir = scratch_dir("env");
  const fs::path flag_dir = scratch_dir("env_flag");
  ::setenv(cli::kOutputDirEnv, env_dir.string().c_str(), 1);
  CHECK(run_cli({"solve", "--resolution", "9"}).code == 0);
  CHECK(fs::exists(env_dir / "report.json"));
  CHECK(run_cli({"solve", "--resolution", "9", "--output_dir", flag_dir.string()}).code == 0);
  CHECK(fs::exists(flag_dir / "report.json"));
  ::unsetenv(cli::kOutputDirEnv);
}

TEST_CASE("cli solve reports non-convergence with exit code 2") {
  const fs::path dir = scratch_dir("noconv");
  const CliRun r = run_cli({"solve", "--preset", "bump", "--initial", "preset", "--method", "mcf",
                            "--max_iter", "3", "--resolution", "9", "--output_dir", dir.string()});
  CHECK(r.code == 2);
  const json report = load_json(dir / "report.json");
  CHECK_FALSE(report.at("solve").at("converged").get<bool>());
  CHECK(report.at("solve").at("history").size() == 3);
}

TEST_CASE("cli check passes on a linear solution") {
  const fs::path dir = scratch_dir("check_linear");
  const CliRun r = run_cli({"check", "--preset", "linear", "--params", kLinearParams, "--resolution",
                            "17", "--output_dir", dir.string()});
  INFO(r.err);
  CHECK(r.code == 0);
  const json audit = load_json(dir / "audit.json");
  CHECK(audit.at("schema") == "1");
  CHECK(audit.at("audit").at("all_passed").get<bool>());
  CHECK(all_numbers_finite(audit));
}

TEST_CASE("cli check of a loaded field lists area-decreasing violations") {
  const fs::path dir = scratch_dir("check_violation");
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 9);
  std::vector<double> v(dom.node_count() * 2, 0.0);
  const NodeIndex spike = dom.index({4, 4, 0});
  v[(spike + 1) * 2] = 1.0;       // f1 rises along x at the centre
  v[(spike + dom.stride(1)) * 2 + 1] = 1.0;  // f2 rises along y at the centre
  write_file_atomic(dir / "fields.csv", field_to_csv(VectorField(dom, 2, v)));
  const CliRun r = run_cli({"check", "--field", (dir / "fields.csv").string(), "--output_dir",
                            dir.string()});
  CHECK(r.code == 3);
  const json audit = load_json(dir / "audit.json");
  const auto violations = audit.at("area_violations").get<std::vector<NodeIndex>>();
  CHECK(std::find(violations.begin(), violations.end(), spike) != violations.end());
}

TEST_CASE("cli check rejects a malformed CSV with exit code 1") {
  const fs::path dir = scratch_dir("check_malformed");
  std::ofstream(dir / "fields.csv") << "x1,x2,f1\n0,0,zero\n";
  CHECK(run_cli({"check", "--field", (dir / "fields.csv").string(), "--output_dir", dir.string()})
            .code == 1);
  CHECK(run_cli({"check", "--field", (dir / "missing.csv").string(), "--output_dir", dir.string()})
            .code == 1);
}

TEST_CASE("cli convergence on a linear preset skips the order fits") {
  const fs::path dir = scratch_dir("conv_linear");
  const CliRun r = run_cli({"convergence", "--preset", "linear", "--params", kLinearParams, "--levels",
                            "[9,17,33]", "--output_dir", dir.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "convergence.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "h,residual_sup,identity_gap_sup,superharmonicity_slack");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    while (std::getline(cells, cell, ',')) CHECK(std::abs(std::stod(cell)) < 1e-10);
  }
  CHECK(rows == 3);
  const json orders = load_json(dir / "report.json").at("orders");
  for (const auto& [name, value] : orders.items()) CHECK(value.is_null());
}

TEST_CASE("cli convergence on Scherk data measures second order") {
  const fs::path dir = scratch_dir("conv_scherk");
  const CliRun r = run_cli({"convergence", "--preset", "scherk", "--output_dir", dir.string()});
  REQUIRE(r.code == 0);
  const json orders = load_json(dir / "report.json").at("orders");
  const double order = orders.at("residual_sup").get<double>();
  CHECK(order >= 1.7);
  CHECK(order <= 2.3);
  CHECK(orders.at("identity_gap_sup").get<double>() >= 1.0);
}

TEST_CASE("cli convergence stops at a failing level with a partial CSV") {
  const fs::path dir = scratch_dir("conv_fail");
  const CliRun r = run_cli({"convergence", "--preset", "bump", "--initial", "preset", "--method", "mcf",
                            "--max_iter", "2", "--levels", "[9,17,33]", "--output_dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(slurp(dir / "convergence.csv") == "h,residual_sup,identity_gap_sup,superharmonicity_slack\n");
}

TEST_CASE("cli outputs are byte-identical for identical configurations") {
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  for (const fs::path& dir : {a, b}) {
    REQUIRE(run_cli({"solve", "--preset", "random_lipschitz", "--m", "2", "--seed", "12", "--resolution",
                     "17", "--output_dir", dir.string()})
                .code == 0);
    REQUIRE(run_cli({"check", "--field", (dir / "fields.csv").string(), "--output_dir", dir.string()})
                .code != 1);
  }
  for (const char* name : {"fields.csv", "report.json"}) {
    INFO(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  // audit.json records the path of the audited file; everything else matches.
  auto without_paths = [](json j) {
    j["config"].erase("field");
    j["config"].erase("output_dir");
    j["source"].erase("path");
    return j.dump();
  };
  CHECK(without_paths(load_json(a / "audit.json")) == without_paths(load_json(b / "audit.json")));
}

TEST_CASE("cli svd-report prints the pointwise geometry") {
  const CliRun r = run_cli({"svd-report", "2,0;0,3"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("schema") == "1");
  CHECK(std::abs(j.at("singular_values")[0].get<double>() - 3.0) < 1e-14);
  CHECK(std::abs(j.at("wedge2_norm").get<double>() - 6.0) < 1e-13);
  CHECK(j.contains("omega1"));
  CHECK(run_cli({"svd-report", "1,2;3"}).code == 1);
}

TEST_CASE("installed cli binary returns documented exit codes") {
  const fs::path dir = scratch_dir("binary");
  const std::string base = std::string(MSS_CLI_PATH) + " ";
  const auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(base + "solve --resolution 9 --output_dir " + dir.string()) == 0);
  CHECK(status(base + "solve --resolution 3 --output_dir " + dir.string()) == 1);
  CHECK(status(base + "svd-report '1,2;3,4'") == 0);
}
