#pragma once

// Batch front end: run configuration, the solve / check / convergence /
// svd-report subcommands, and their file artifacts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mss/diagnostics.hpp"
#include "mss/io.hpp"
#include "mss/presets.hpp"
#include "mss/solvers.hpp"

namespace mss::cli {

using nlohmann::json;

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutputDirEnv = "MSS_OUTPUT_DIR";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitNotConverged = 2,
  kExitAuditFailed = 3,
};

/// Type of a configuration key; flag values for `text` keys are taken
/// verbatim, everything else is parsed as JSON.
enum class KeyKind { text, value };

struct KeySpec {
  const char* name;
  KeyKind kind;
  const char* help;
};

inline const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys{
      {"n", KeyKind::value, "domain dimension (2 or 3)"},
      {"m", KeyKind::value, "codimension; defaults to the preset's natural value"},
      {"lower", KeyKind::value, "box lower corner: number or array of n numbers"},
      {"upper", KeyKind::value, "box upper corner: number or array of n numbers"},
      {"resolution", KeyKind::value, "nodes per axis: integer or array of n integers"},
      {"preset", KeyKind::text, "boundary data preset"},
      {"params", KeyKind::value, "preset parameters (JSON object)"},
      {"seed", KeyKind::value, "seed for randomized presets"},
      {"boundary_scale", KeyKind::value, "scale s applied to the boundary data"},
      {"initial", KeyKind::text, "initial field: harmonic or preset"},
      {"perturbation", KeyKind::value, "amplitude of an interior bump added to the initial field"},
      {"method", KeyKind::text, "solver: newton or mcf"},
      {"velocity", KeyKind::text, "mcf velocity: conservative or nondivergence"},
      {"dt_factor", KeyKind::value, "mcf time step as a multiple of h^2 (0 = 1/(4n))"},
      {"tol", KeyKind::value, "convergence tolerance"},
      {"max_iter", KeyKind::value, "iteration cap"},
      {"continuation_steps", KeyKind::value, "Newton boundary continuation stages"},
      {"damping", KeyKind::value, "Newton backtracking factor"},
      {"audit_area_decreasing", KeyKind::value, "enable the area-decreasing audit"},
      {"audit_superharmonicity", KeyKind::value, "enable the superharmonicity audits"},
      {"audit_identity", KeyKind::value, "enable the identity audits"},
      {"audit_gauss_map", KeyKind::value, "enable the Gauss-map audit (n = m = 2)"},
      {"audit_min_principle", KeyKind::value, "enable the minimum-principle audit"},
      {"audit_gradient_bound", KeyKind::value, "enable the gradient-bound report"},
      {"c_check", KeyKind::value, "constant of the discretization budget tau(h)"},
      {"collar", KeyKind::value, "boundary collar width in grid steps"},
      {"solution_tol", KeyKind::value, "residual below which a field counts as solved"},
      {"output_dir", KeyKind::text, "directory for emitted files"},
      {"levels", KeyKind::value, "resolutions for the convergence study"},
      {"field", KeyKind::text, "fields.csv to audit instead of solving"},
  };
  return keys;
}

inline json default_config() {
  return json{{"n", 2},
              {"m", nullptr},
              {"lower", -1.0},
              {"upper", 1.0},
              {"resolution", 33},
              {"preset", "zero"},
              {"params", json::object()},
              {"seed", nullptr},
              {"boundary_scale", 1.0},
              {"initial", "harmonic"},
              {"perturbation", 0.0},
              {"method", "newton"},
              {"velocity", "conservative"},
              {"dt_factor", 0.0},
              {"tol", 1e-8},
              {"max_iter", 200000},
              {"continuation_steps", 4},
              {"damping", 0.5},
              {"audit_area_decreasing", true},
              {"audit_superharmonicity", true},
              {"audit_identity", true},
              {"audit_gauss_map", true},
              {"audit_min_principle", true},
              {"audit_gradient_bound", false},
              {"c_check", 10.0},
              {"collar", 2},
              {"solution_tol", 1e-6},
              {"output_dir", "out"},
              {"levels", json::array({17, 33, 65})},
              {"field", nullptr}};
}

/// Validated run configuration.
struct RunConfig {
  GridDomain domain;
  int m = 1;
  std::string preset;
  json params;
  double boundary_scale = 1.0;
  bool initial_harmonic = true;
  double perturbation = 0.0;
  SolveConfig solver;
  AuditConfig audit;
  std::filesystem::path output_dir;
  std::vector<int> levels;
  std::optional<std::filesystem::path> field;
  json resolved;  // the effective flat configuration, minus output_dir
};

struct RunArtifacts {
  std::vector<std::filesystem::path> files;
};

namespace detail {

[[noreturn]] inline void bad_key(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::invalid_argument, "config key '" + key + "' " + what);
}

inline double get_number(const json& cfg, const char* key) {
  if (!cfg.at(key).is_number()) bad_key(key, "must be a number");
  return cfg.at(key).get<double>();
}

inline int get_int(const json& cfg, const char* key) {
  if (!cfg.at(key).is_number_integer()) bad_key(key, "must be an integer");
  return cfg.at(key).get<int>();
}

inline bool get_bool(const json& cfg, const char* key) {
  if (!cfg.at(key).is_boolean()) bad_key(key, "must be true or false");
  return cfg.at(key).get<bool>();
}

inline std::string get_text(const json& cfg, const char* key) {
  if (!cfg.at(key).is_string()) bad_key(key, "must be a string");
  return cfg.at(key).get<std::string>();
}

template <class T, class Get>
std::array<T, kMaxGridDim> per_axis(const json& cfg, const char* key, int n, Get get) {
  std::array<T, kMaxGridDim> out{};
  const json& v = cfg.at(key);
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != n) bad_key(key, "must have n entries");
    for (int k = 0; k < n; ++k) out[k] = get(json{{key, v[k]}}, key);
  } else {
    const T x = get(cfg, key);
    for (int k = 0; k < n; ++k) out[k] = x;
  }
  return out;
}

inline int natural_codimension(const std::string& preset, const json& params) {
  if (preset == "holomorphic_quadratic") return 2;
  if (!params.is_object()) return 1;
  if (preset == "linear") {
    // The affine map fixes its own codimension.
    if (params.contains("A") && params.at("A").is_array() && !params.at("A").empty())
      return static_cast<int>(params.at("A").size());
    if (params.contains("b") && params.at("b").is_array() && !params.at("b").empty())
      return static_cast<int>(params.at("b").size());
  }
  if (preset == "scaled" && params.contains("preset") && params.at("preset").is_string()) {
    return natural_codimension(params.at("preset").get<std::string>(),
                               params.contains("params") ? params.at("params") : json::object());
  }
  return 1;
}

}  // namespace detail

/// Checks every key and builds the typed configuration. `raw` holds the
/// merged flat JSON (defaults, file, environment, flags).
inline RunConfig make_run_config(const json& raw) {
  if (!raw.is_object()) throw Error(ErrorCode::invalid_argument, "config must be a JSON object");
  json cfg = default_config();
  for (const auto& [key, value] : raw.items()) {
    if (!cfg.contains(key)) throw Error(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
    cfg[key] = value;
  }

  RunConfig rc;
  const int n = detail::get_int(cfg, "n");
  if (n < 2 || n > kMaxGridDim) detail::bad_key("n", "must be 2 or 3");
  rc.preset = detail::get_text(cfg, "preset");
  rc.params = cfg.at("params");
  if (!rc.params.is_object()) detail::bad_key("params", "must be a JSON object");
  if (!cfg.at("seed").is_null()) {
    if (!cfg.at("seed").is_number_unsigned()) detail::bad_key("seed", "must be a non-negative integer");
    if (rc.preset == "random_lipschitz" && !rc.params.contains("seed")) {
      rc.params["seed"] = cfg.at("seed");
    }
  }
  rc.m = cfg.at("m").is_null() ? detail::natural_codimension(rc.preset, rc.params)
                               : detail::get_int(cfg, "m");
  cfg["m"] = rc.m;
  rc.domain = GridDomain(n, detail::per_axis<double>(cfg, "lower", n, detail::get_number),
                         detail::per_axis<double>(cfg, "upper", n, detail::get_number),
                         detail::per_axis<int>(cfg, "resolution", n, detail::get_int));
  rc.boundary_scale = detail::get_number(cfg, "boundary_scale");

  const std::string initial = detail::get_text(cfg, "initial");
  if (initial != "harmonic" && initial != "preset") detail::bad_key("initial", "must be harmonic or preset");
  rc.initial_harmonic = initial == "harmonic";
  rc.perturbation = detail::get_number(cfg, "perturbation");

  const std::string method = detail::get_text(cfg, "method");
  if (method != "newton" && method != "mcf") detail::bad_key("method", "must be newton or mcf");
  rc.solver.method = method == "mcf" ? SolveMethod::mcf : SolveMethod::newton;
  const std::string velocity = detail::get_text(cfg, "velocity");
  if (velocity != "conservative" && velocity != "nondivergence") {
    detail::bad_key("velocity", "must be conservative or nondivergence");
  }
  rc.solver.velocity =
      velocity == "conservative" ? VelocityScheme::conservative : VelocityScheme::nondivergence;
  rc.solver.dt_factor = detail::get_number(cfg, "dt_factor");
  rc.solver.tol = detail::get_number(cfg, "tol");
  rc.solver.max_iter = detail::get_int(cfg, "max_iter");
  rc.solver.continuation_steps = detail::get_int(cfg, "continuation_steps");
  rc.solver.damping = detail::get_number(cfg, "damping");
  if (!(rc.solver.damping > 0.0 && rc.solver.damping < 1.0)) {
    detail::bad_key("damping", "must lie in (0, 1)");
  }
  validate(rc.solver, n);

  rc.audit.area_decreasing = detail::get_bool(cfg, "audit_area_decreasing");
  rc.audit.superharmonicity = detail::get_bool(cfg, "audit_superharmonicity");
  rc.audit.identity = detail::get_bool(cfg, "audit_identity");
  rc.audit.gauss_map = detail::get_bool(cfg, "audit_gauss_map");
  rc.audit.min_principle = detail::get_bool(cfg, "audit_min_principle");
  rc.audit.gradient_bound = detail::get_bool(cfg, "audit_gradient_bound");
  rc.audit.c_check = detail::get_number(cfg, "c_check");
  rc.audit.collar = detail::get_int(cfg, "collar");
  rc.audit.solution_tol = detail::get_number(cfg, "solution_tol");
  if (rc.audit.collar < 1) detail::bad_key("collar", "must be >= 1");

  rc.output_dir = detail::get_text(cfg, "output_dir");
  if (!cfg.at("levels").is_array()) detail::bad_key("levels", "must be an array of integers");
  for (const auto& lv : cfg.at("levels")) {
    if (!lv.is_number_integer()) detail::bad_key("levels", "must be an array of integers");
    rc.levels.push_back(lv.get<int>());
  }
  if (!cfg.at("field").is_null()) rc.field = detail::get_text(cfg, "field");

  // Building the preset once validates its name, parameters and dimensions.
  (void)sample_preset(rc.preset, rc.params, rc.domain, rc.m);

  cfg.erase("output_dir");
  rc.resolved = std::move(cfg);
  return rc;
}

/// Initial field and Dirichlet data for a configuration on `domain`.
struct Problem {
  VectorField exact;  // the preset sampled on the grid
  BoundaryData boundary;
  VectorField initial;
};

inline Problem build_problem(const RunConfig& rc, const GridDomain& domain) {
  VectorField sampled = sample_preset(rc.preset, rc.params, domain, rc.m);
  std::vector<double> scaled(sampled.values().begin(), sampled.values().end());
  for (double& v : scaled) v *= rc.boundary_scale;
  VectorField target(domain, rc.m, std::move(scaled));
  BoundaryData boundary = BoundaryData::from_field(target);
  VectorField initial = rc.initial_harmonic ? harmonic_extension(boundary) : target;
  if (rc.perturbation != 0.0) {
    const VectorField bump =
        sample_preset("bump", json{{"amplitude", rc.perturbation}}, domain, rc.m);
    std::vector<double> v(initial.values().begin(), initial.values().end());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += bump.values()[k];
    boundary.apply(v);
    initial = VectorField(domain, rc.m, std::move(v));
  }
  return {std::move(sampled), std::move(boundary), std::move(initial)};
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline std::filesystem::path emit(const RunConfig& rc, const std::string& name,
                                  const std::string& content) {
  const std::filesystem::path path = rc.output_dir / name;
  write_file_atomic(path, content);
  return path;
}

inline json report_header(const RunConfig& rc, const char* command) {
  return json{{"schema", kSchemaVersion}, {"command", command}, {"config", rc.resolved}};
}

/// Solves the configured problem; writes fields.csv (with diagnostic columns)
/// and report.json. Returns the exit code.
inline int cmd_solve(const RunConfig& rc, RunArtifacts& artifacts, std::ostream& err) {
  const Problem problem = build_problem(rc, rc.domain);
  SolveResult result;
  try {
    result = solve(problem.initial, problem.boundary, rc.solver);
  } catch (const Error& e) {
    // Newton failures surface as exceptions; they are a non-convergence.
    result.field = problem.initial;
    result.report.method = rc.solver.method;
    result.report.message = e.what();
  }
  err << "solve: " << to_string(result.report.method) << " converged=" << result.report.converged
      << " iterations=" << result.report.iterations << " residual=" << result.report.residual_sup
      << " wall_time=" << result.report.wall_time_seconds << "s\n";

  json report = report_header(rc, "solve");
  report["solve"] = to_json(result.report);
  if (result.report.converged) {
    FieldAnalysis fa;
    (void)run_audits(result.field, rc.audit, &fa);
    const NodeDiagnostics diag = node_diagnostics(result.field, fa);
    artifacts.files.push_back(emit(rc, "fields.csv", field_to_csv(result.field, &diag)));
  }
  artifacts.files.push_back(emit(rc, "report.json", dump_json(report)));
  if (!result.report.converged) {
    err << "error: solver did not converge: " << result.report.message << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

/// Audits a loaded field (config key `field`) or a freshly solved one; writes
/// audit.json. Exit 0 iff every pass/fail audit passes.
inline int cmd_check(const RunConfig& rc, RunArtifacts& artifacts, std::ostream& err) {
  VectorField field;
  json source;
  if (rc.field) {
    field = load_field_csv(*rc.field);
    source = {{"kind", "file"}, {"path", rc.field->string()}};
  } else {
    const Problem problem = build_problem(rc, rc.domain);
    SolveResult result;
    try {
      result = solve(problem.initial, problem.boundary, rc.solver);
    } catch (const Error& e) {
      result.field = problem.initial;
      result.report.message = e.what();
    }
    field = result.field;
    source = {{"kind", "solve"}, {"solve", to_json(result.report)}};
  }

  const AuditReport audit = run_audits(field, rc.audit);
  json out = report_header(rc, "check");
  out["source"] = source;
  out["audit"] = to_json(audit);
  const AreaDecreasingResult ad = area_decreasing_audit(field);
  out["area_violations"] = ad.violations;
  artifacts.files.push_back(emit(rc, "audit.json", dump_json(out)));

  for (const auto& c : audit.checks) {
    err << "check " << c.name << ": "
        << (c.informational ? "info" : (c.passed ? "pass" : "FAIL"))
        << " worst=" << format_number(c.worst_value) << " tol=" << format_number(c.tolerance)
        << (c.note.empty() ? "" : " (" + c.note + ")") << "\n";
  }
  return audit.all_passed() ? kExitOk : kExitAuditFailed;
}

/// Solve + audit per refinement level; writes convergence.csv (rows: h,
/// residual_sup, identity_gap_sup, superharmonicity_slack) and report.json
/// with the fitted orders.
inline int cmd_convergence(const RunConfig& rc, RunArtifacts& artifacts, std::ostream& err) {
  if (rc.levels.size() < 3) {
    throw Error(ErrorCode::invalid_argument, "convergence study needs at least 3 levels");
  }
  std::vector<double> hs, residual, gap, slack;
  json level_reports = json::array();
  std::string csv = "h,residual_sup,identity_gap_sup,superharmonicity_slack\n";
  int code = kExitOk;
  for (int level : rc.levels) {
    std::array<double, kMaxGridDim> lo{}, hi{};
    for (int k = 0; k < rc.domain.n(); ++k) {
      lo[k] = rc.domain.lower(k);
      hi[k] = rc.domain.upper(k);
    }
    const GridDomain dom(rc.domain.n(), lo, hi, {level, level, level});
    const Problem problem = build_problem(rc, dom);
    SolveResult result;
    try {
      result = solve(problem.initial, problem.boundary, rc.solver);
    } catch (const Error& e) {
      result.field = problem.initial;
      result.report.method = rc.solver.method;
      result.report.message = e.what();
    }
    level_reports.push_back({{"resolution", level}, {"solve", to_json(result.report)}});
    err << "level " << level << ": converged=" << result.report.converged
        << " iterations=" << result.report.iterations << "\n";
    if (!result.report.converged) {
      err << "error: level " << level << " did not converge: " << result.report.message << "\n";
      code = kExitNotConverged;
      break;
    }
    FieldAnalysis fa;
    AuditConfig audit = rc.audit;
    audit.identity = audit.superharmonicity = true;
    const AuditReport ar = run_audits(result.field, audit, &fa);
    const double h = dom.max_spacing();
    // Truncation residual of the sampled preset: zero to rounding for exact
    // solutions, O(h^2) otherwise.
    const double res = mss::detail::interior_sup(dom, rc.m, divergence_residual(problem.exact));
    const double g = ar.find("identity_31")->worst_value;
    const double sl = std::max(0.0, ar.find("differential_inequality")->worst_value);
    hs.push_back(h);
    residual.push_back(res);
    gap.push_back(g);
    slack.push_back(sl);
    csv += format_number(h) + "," + format_number(res) + "," + format_number(g) + "," +
           format_number(sl) + "\n";
  }
  artifacts.files.push_back(emit(rc, "convergence.csv", csv));

  auto order = [&](const std::vector<double>& v) -> json {
    if (code != kExitOk) return nullptr;
    const auto o = observed_order(hs, v);
    return o ? json(*o) : json(nullptr);
  };
  json report = report_header(rc, "convergence");
  report["levels"] = level_reports;
  report["orders"] = {{"residual_sup", order(residual)},
                      {"identity_gap_sup", order(gap)},
                      {"superharmonicity_slack", order(slack)}};
  artifacts.files.push_back(emit(rc, "report.json", dump_json(report)));
  return code;
}

/// Parses "a,b;c,d" (rows separated by ';', entries by ',' or spaces).
inline Jacobian parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream all(text);
  std::string row;
  while (std::getline(all, row, ';')) {
    for (char& c : row)
      if (c == ',') c = ' ';
    std::istringstream in(row);
    std::vector<double> entries;
    std::string tok;
    while (in >> tok) entries.push_back(mss::detail::parse_double(tok, 1));
    if (entries.empty()) throw Error(ErrorCode::parse, "empty matrix row in '" + text + "'");
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw Error(ErrorCode::parse, "empty matrix");
  const std::size_t cols = rows.front().size();
  SmallMatrix mat(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorCode::parse, "matrix rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) mat(r, c) = rows[r][c];
  }
  return Jacobian(mat);
}

inline json matrix_json(const SmallMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

/// Pointwise geometry of a single Jacobian (m rows, n columns) as JSON.
inline json svd_report(const Jacobian& jac) {
  const SingularDecomposition sd = svd(jac);
  const MetricData md = metric(jac);
  json lambdas = json::array();
  for (Eigen::Index i = 0; i < sd.lambdas.size(); ++i) lambdas.push_back(sd.lambdas(i));
  json out{{"schema", kSchemaVersion},
           {"m", jac.m()},
           {"n", jac.n()},
           {"matrix", matrix_json(jac.matrix())},
           {"singular_values", lambdas},
           {"right_basis", matrix_json(sd.right_basis)},
           {"left_basis", matrix_json(sd.left_basis)},
           {"op_norm", op_norm(jac)},
           {"wedge2_norm", wedge2_norm(jac)},
           {"area_decreasing", wedge2_norm(jac) < 1.0},
           {"metric", matrix_json(md.g)},
           {"sqrt_g", md.sqrt_g},
           {"star_omega", md.star_omega}};
  if (jac.m() == 2 && jac.n() == 2) {
    const GrassmannPoint gp = grassmann_forms(jac);
    const GrassmannPoint oriented = oriented_grassmann_forms(jac);
    out["omega1"] = gp.omega1;
    out["omega2"] = gp.omega2;
    out["oriented_omega1"] = oriented.omega1;
    out["oriented_omega2"] = oriented.omega2;
  }
  return out;
}

inline json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, "config " + path.string() + ": " + e.what());
  }
}

/// Entry point of the `mss` tool. Precedence for every key: command-line
/// flag, then MSS_OUTPUT_DIR (output_dir only), then the config file, then
/// the built-in default.
inline int run(int argc, char** argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Minimal surface system solver and auditor"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::vector<CLI::App*> run_commands;
  for (const char* name : {"solve", "check", "convergence"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "flat JSON configuration file");
    for (const KeySpec& key : config_keys()) {
      sub->add_option_function<std::string>(
          std::string("--") + key.name,
          [&overrides, key](const std::string& v) { overrides[key.name] = v; }, key.help);
    }
    run_commands.push_back(sub);
  }
  run_commands[0]->description("solve the Dirichlet problem; writes fields.csv and report.json");
  run_commands[1]->description("audit a solved or loaded field; writes audit.json");
  run_commands[2]->description("refinement study; writes convergence.csv and report.json");

  std::string matrix_text;
  CLI::App* svd_cmd =
      app.add_subcommand("svd-report", "pointwise geometry of one matrix, e.g. \"1,2;3,4\"");
  svd_cmd->add_option("matrix", matrix_text, "rows separated by ';', entries by ','")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (svd_cmd->parsed()) {
      out << dump_json(svd_report(parse_matrix(matrix_text)));
      return kExitOk;
    }
    json raw = config_path.empty() ? json::object() : read_config_file(config_path);
    if (!raw.is_object()) throw Error(ErrorCode::parse, "config must be a JSON object");
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) raw["output_dir"] = env;
    for (const KeySpec& key : config_keys()) {
      const auto it = overrides.find(key.name);
      if (it == overrides.end()) continue;
      if (key.kind == KeyKind::text) {
        raw[key.name] = it->second;
      } else {
        try {
          raw[key.name] = json::parse(it->second);
        } catch (const json::parse_error&) {
          throw Error(ErrorCode::parse,
                      std::string("--") + key.name + ": '" + it->second + "' is not valid JSON");
        }
      }
    }
    const RunConfig rc = make_run_config(raw);
    RunArtifacts artifacts;
    int code = kExitOk;
    if (run_commands[0]->parsed()) code = cmd_solve(rc, artifacts, err);
    if (run_commands[1]->parsed()) code = cmd_check(rc, artifacts, err);
    if (run_commands[2]->parsed()) code = cmd_convergence(rc, artifacts, err);
    for (const auto& f : artifacts.files) out << f.string() << "\n";
    return code;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace mss::cli
