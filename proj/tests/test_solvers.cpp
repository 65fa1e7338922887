#include <cmath>

#include "catch_amalgamated.hpp"
#include "mss/presets.hpp"
#include "mss/solvers.hpp"

using namespace mss;
using Catch::Matchers::WithinAbs;

namespace {

double sup_diff(const VectorField& a, const VectorField& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k)
    d = std::max(d, std::abs(a.values()[k] - b.values()[k]));
  return d;
}

VectorField add(const VectorField& a, const VectorField& b) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += b.values()[k];
  return VectorField(a.domain(), a.m(), std::move(v));
}

const nlohmann::json kLinear = {{"A", {{0.4, -0.3}, {0.2, 0.5}}}, {"b", {0.1, -0.2}}};

}  // namespace

TEST_CASE("harmonic extension keeps boundary values and reproduces affine data") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 17);
  const VectorField lin = sample_preset("linear", kLinear, dom, 2);
  const VectorField ext = harmonic_extension(BoundaryData::from_field(lin));
  CHECK(BoundaryData::from_field(lin).matches(ext));
  CHECK(sup_diff(ext, lin) < 1e-12);
}

TEST_CASE("mcf_step leaves a linear map unchanged") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 17);
  const VectorField lin = sample_preset("linear", kLinear, dom, 2);
  const double dt = 0.125 * dom.min_spacing() * dom.min_spacing();
  CHECK(sup_diff(mcf_step(lin, dt, VelocityScheme::conservative), lin) < 1e-15);
  CHECK(sup_diff(mcf_step(lin, dt, VelocityScheme::nondivergence), lin) < 1e-15);
}

TEST_CASE("mcf_step rejects time steps beyond the stability limit") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 9);
  const double h = dom.min_spacing();
  CHECK_THROWS_AS(mcf_step(VectorField::zeros(dom, 1), 0.3 * h * h), Error);
}

TEST_CASE("mcf_step on an exact solution moves by dt times the truncation error") {
  std::vector<double> moves;
  for (int res : {17, 33}) {
    const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, res);
    const VectorField f = sample_preset("scherk", {}, dom, 1);
    const double dt = 0.125 * dom.min_spacing() * dom.min_spacing();
    moves.push_back(sup_diff(mcf_step(f, dt, VelocityScheme::nondivergence), f) / dt);
  }
  CHECK(moves[0] / moves[1] > 3.0);
}

TEST_CASE("mcf_step decreases the volume of a bump") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 17);
  const VectorField bump = sample_preset("bump", {{"amplitude", 0.3}}, dom, 2);
  const double dt = 0.125 * dom.min_spacing() * dom.min_spacing();
  for (VelocityScheme scheme : {VelocityScheme::conservative, VelocityScheme::nondivergence}) {
    CHECK(volume(mcf_step(bump, dt, scheme)) < volume(bump));
  }
}

TEST_CASE("mcf converges to the linear map from a perturbed start") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 13);
  const VectorField lin = sample_preset("linear", kLinear, dom, 2);
  const BoundaryData bd = BoundaryData::from_field(lin);
  const VectorField start = add(lin, sample_preset("bump", {{"amplitude", 0.2}}, dom, 2));
  SolveConfig cfg;
  cfg.method = SolveMethod::mcf;
  const SolveResult res = mcf_solve(start, bd, cfg);
  CHECK(res.report.converged);
  CHECK(sup_diff(res.field, lin) < 1e-7);
  CHECK(bd.matches(res.field));
  CHECK(res.report.residual_sup < 1e-7);
}

TEST_CASE("mcf relaxes a bump with zero boundary to zero") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 9);
  const VectorField bump = sample_preset("bump", {{"amplitude", 0.3}}, dom, 1);
  SolveConfig cfg;
  cfg.method = SolveMethod::mcf;
  cfg.velocity = VelocityScheme::nondivergence;
  const SolveResult res = mcf_solve(bump, BoundaryData::from_field(bump), cfg);
  CHECK(res.report.converged);
  for (double v : res.field.values()) CHECK(std::abs(v) < 1e-7);
  // The volume history is monotone along the flow.
  for (std::size_t k = 1; k < res.report.history.size(); ++k) {
    CHECK(res.report.history[k].volume <= res.report.history[k - 1].volume + 1e-15);
  }
}

TEST_CASE("mcf reports the iteration cap without throwing") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 9);
  const VectorField bump = sample_preset("bump", {{"amplitude", 0.3}}, dom, 1);
  SolveConfig cfg;
  cfg.method = SolveMethod::mcf;
  cfg.max_iter = 5;
  const SolveResult res = mcf_solve(bump, BoundaryData::from_field(bump), cfg);
  CHECK_FALSE(res.report.converged);
  CHECK(res.report.iterations == 5);
  CHECK_FALSE(res.report.message.empty());
}

TEST_CASE("solvers reject an initial field with the wrong boundary values") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 9);
  const VectorField lin = sample_preset("linear", kLinear, dom, 2);
  const BoundaryData bd = BoundaryData::from_field(lin);
  CHECK_THROWS_AS(newton_solve(VectorField::zeros(dom, 2), bd, SolveConfig{}), Error);
  SolveConfig bad;
  bad.dt_factor = 0.5;
  CHECK_THROWS_AS(mcf_solve(lin, bd, bad), Error);
}

TEST_CASE("newton starting at a discrete near-solution needs at most one step") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 33);
  const VectorField sch = sample_preset("scherk", {}, dom, 1);
  SolveConfig cfg;
  cfg.continuation_steps = 1;
  cfg.tol = 1e-2;
  const SolveResult res = newton_solve(sch, BoundaryData::from_field(sch), cfg);
  CHECK(res.report.converged);
  CHECK(res.report.iterations <= 1);
}

TEST_CASE("newton converges quadratically and decreases the residual every step") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 17);
  const VectorField lin = sample_preset("linear", kLinear, dom, 2);
  const BoundaryData bd = BoundaryData::from_field(lin);
  const VectorField start = add(lin, sample_preset("bump", {{"amplitude", 0.5}}, dom, 2));
  SolveConfig cfg;
  cfg.continuation_steps = 1;
  cfg.tol = 1e-13;
  const SolveResult res = newton_solve(start, bd, cfg);
  REQUIRE(res.report.converged);
  CHECK(sup_diff(res.field, lin) < 1e-12);
  const auto& h = res.report.history;
  REQUIRE(h.size() >= 3);
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k].residual < h[k - 1].residual);
  // Quadratic convergence: log(r_{k+1}/r_k) / log(r_k/r_{k-1}) approaches 2
  // over the last steps (the returned residual sits at the rounding floor).
  const std::size_t k = h.size() - 1;
  const double rate =
      std::log(h[k].residual / h[k - 1].residual) / std::log(h[k - 1].residual / h[k - 2].residual);
  CHECK(rate >= 1.8);
}

TEST_CASE("newton and mcf agree on a nonlinear Dirichlet problem") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 17);
  const BoundaryData bd =
      BoundaryData::from_field(sample_preset("holomorphic_quadratic", {{"c", 0.15}}, dom, 2));
  const VectorField start =
      add(harmonic_extension(bd), sample_preset("bump", {{"amplitude", 0.2}}, dom, 2));
  SolveConfig cfg;
  const SolveResult newton = newton_solve(start, bd, cfg);
  cfg.method = SolveMethod::mcf;
  const SolveResult mcf = mcf_solve(start, bd, cfg);
  REQUIRE(newton.report.converged);
  REQUIRE(mcf.report.converged);
  CHECK(sup_diff(newton.field, mcf.field) < 10.0 * cfg.tol);
  CHECK(bd.matches(newton.field));
  CHECK(bd.matches(mcf.field));
}

TEST_CASE("solvers are deterministic") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 17);
  const VectorField f = sample_preset("random_lipschitz", {{"seed", 9}}, dom, 2);
  const BoundaryData bd = BoundaryData::from_field(f);
  const VectorField start = harmonic_extension(bd);
  const SolveResult a = newton_solve(start, bd, SolveConfig{});
  const SolveResult b = newton_solve(start, bd, SolveConfig{});
  REQUIRE(a.report.converged);
  CHECK(std::equal(a.field.values().begin(), a.field.values().end(), b.field.values().begin()));
  CHECK(a.report.iterations == b.report.iterations);
}

TEST_CASE("large boundary data defeats Newton with a structured error or a report") {
  const GridDomain dom = GridDomain::cube(2, -1.0, 1.0, 9);
  const BoundaryData bd = BoundaryData::from_field(
      sample_preset("scaled", {{"preset", "trig"}, {"params", {{"frequency", 6.0}}}, {"factor", 400.0}},
                    dom, 2));
  SolveConfig cfg;
  cfg.continuation_steps = 1;
  cfg.max_iter = 3;
  try {
    const SolveResult res = newton_solve(harmonic_extension(bd), bd, cfg);
    CHECK_FALSE(res.report.converged);
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::stagnation || e.code() == ErrorCode::singular_linearization));
  }
}
