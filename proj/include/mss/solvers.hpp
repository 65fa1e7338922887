#pragma once

// Dirichlet solvers for the minimal surface system on a box: explicit
// graphical mean curvature flow relaxed to stationarity, and damped Newton
// with boundary-data continuation.

#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mss/graph_calculus.hpp"
#include "mss/grid.hpp"

namespace mss {

enum class SolveMethod { mcf, newton };

/// Discretization of the flow velocity g^{ij} d_i d_j f.
enum class VelocityScheme {
  /// Recovered from the divergence residual; shares its zeros with the
  /// discrete system Newton solves.
  conservative,
  /// Central-difference jets, mcf_velocity().
  nondivergence,
};

struct SolveConfig {
  SolveMethod method = SolveMethod::newton;
  double dt_factor = 0.0;  // 0 selects 1 / (4 n)
  double tol = 1e-8;
  int max_iter = 200000;
  int continuation_steps = 4;
  double damping = 0.5;
  VelocityScheme velocity = VelocityScheme::conservative;
};

struct HistoryEntry {
  double residual = 0.0;
  double sup_wedge2 = 0.0;
  double min_star_omega = 1.0;
  double volume = 0.0;
};

struct SolveReport {
  SolveMethod method = SolveMethod::newton;
  bool converged = false;
  int iterations = 0;
  double residual_sup = 0.0;  // divergence residual of the returned field
  double residual_l2 = 0.0;
  std::vector<HistoryEntry> history;
  double wall_time_seconds = 0.0;
  std::string message;
};

struct SolveResult {
  VectorField field;
  SolveReport report;
};

inline std::string to_string(SolveMethod method) {
  return method == SolveMethod::mcf ? "mcf" : "newton";
}

inline void validate(const SolveConfig& cfg, int n) {
  const double dt_factor = cfg.dt_factor == 0.0 ? 1.0 / (4.0 * n) : cfg.dt_factor;
  if (!(dt_factor > 0.0 && dt_factor <= 0.25)) {
    throw Error(ErrorCode::invalid_argument, "dt_factor must lie in (0, 0.25]");
  }
  if (!(cfg.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "tol must be positive");
  if (cfg.max_iter < 1) throw Error(ErrorCode::invalid_argument, "max_iter must be >= 1");
  if (cfg.continuation_steps < 1) {
    throw Error(ErrorCode::invalid_argument, "continuation_steps must be >= 1");
  }
  if (!(cfg.damping > 0.0 && cfg.damping < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "damping must lie in (0, 1)");
  }
}

inline double effective_dt_factor(const SolveConfig& cfg, int n) {
  return cfg.dt_factor == 0.0 ? 1.0 / (4.0 * n) : cfg.dt_factor;
}

/// sup |wedge^2 df| and min *Omega over interior nodes.
inline HistoryEntry field_summary(const VectorField& field, double residual) {
  HistoryEntry e{residual, 0.0, 1.0, volume(field)};
  const GridDomain& dom = field.domain();
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    const JetSample jet = compute_jet(field, p);
    const SingularDecomposition sd = svd(jet.first);
    e.sup_wedge2 = std::max(e.sup_wedge2, wedge2_norm_from(sd.lambdas));
    e.min_star_omega = std::min(e.min_star_omega, star_omega_from(sd.lambdas));
  }
  return e;
}

/// Componentwise discrete harmonic extension of the boundary data (standard
/// (2n+1)-point Laplacian).
inline VectorField harmonic_extension(const BoundaryData& boundary) {
  const GridDomain& dom = boundary.domain();
  const int n = dom.n();
  const int m = boundary.m();
  std::vector<long> unknown(dom.node_count(), -1);
  long count = 0;
  for (NodeIndex p = 0; p < dom.node_count(); ++p)
    if (dom.is_interior(p)) unknown[p] = count++;

  std::vector<double> values(dom.node_count() * m, 0.0);
  boundary.apply(values);

  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(count, m);
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (unknown[p] < 0) continue;
    double diag = 0.0;
    for (int k = 0; k < n; ++k) {
      const double w = 1.0 / (dom.spacing(k) * dom.spacing(k));
      diag += 2.0 * w;
      for (NodeIndex q : {p - dom.stride(k), p + dom.stride(k)}) {
        if (unknown[q] >= 0) {
          triplets.emplace_back(unknown[p], unknown[q], -w);
        } else {
          for (int a = 0; a < m; ++a) rhs(unknown[p], a) += w * values[q * m + a];
        }
      }
    }
    triplets.emplace_back(unknown[p], unknown[p], diag);
  }
  Eigen::SparseMatrix<double> lap(count, count);
  lap.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lap);
  const Eigen::MatrixXd sol = solver.solve(rhs);
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (unknown[p] < 0) continue;
    for (int a = 0; a < m; ++a) values[p * m + a] = sol(unknown[p], a);
  }
  return VectorField(dom, m, std::move(values));
}

inline std::vector<double> flow_velocity(const VectorField& field, VelocityScheme scheme) {
  return scheme == VelocityScheme::conservative ? conservative_velocity(field)
                                                : mcf_velocity(field);
}

/// One explicit Euler step f + dt * velocity on interior nodes, from a
/// snapshot; boundary values are copied unchanged.
inline VectorField mcf_step(const VectorField& field, double dt,
                            VelocityScheme scheme = VelocityScheme::conservative,
                            const std::vector<double>* precomputed_velocity = nullptr) {
  const GridDomain& dom = field.domain();
  const double h = dom.min_spacing();
  if (!(dt > 0.0) || dt > 0.25 * h * h * (1.0 + 1e-12)) {
    throw Error(ErrorCode::invalid_argument, "mcf_step: dt must lie in (0, 0.25 h_min^2]");
  }
  const std::vector<double> local =
      precomputed_velocity ? std::vector<double>{} : flow_velocity(field, scheme);
  const std::vector<double>& vel = precomputed_velocity ? *precomputed_velocity : local;
  const int m = field.m();
  std::vector<double> next(field.values().begin(), field.values().end());
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    for (int a = 0; a < m; ++a) {
      const double v = next[p * m + a] + dt * vel[p * m + a];
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::divergence,
                    "mcf_step produced a non-finite value at node " + std::to_string(p));
      }
      next[p * m + a] = v;
    }
  }
  return VectorField(dom, m, std::move(next));
}

namespace detail {

inline void require_matching(const VectorField& initial, const BoundaryData& boundary) {
  if (!boundary.matches(initial)) {
    throw Error(ErrorCode::invalid_argument,
                "initial field does not carry the prescribed boundary values");
  }
}

inline void finish_report(SolveReport& report, const VectorField& field,
                          std::chrono::steady_clock::time_point start) {
  const std::vector<double> r = divergence_residual(field);
  report.residual_sup = interior_sup(field.domain(), field.m(), r);
  report.residual_l2 = interior_l2(field.domain(), field.m(), r);
  report.iterations = static_cast<int>(report.history.size());
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// Runs the flow until sup |velocity| < tol or max_iter steps. Failures
/// (non-finite values, iteration cap) are reported, not thrown.
inline SolveResult mcf_solve(const VectorField& initial, const BoundaryData& boundary,
                             const SolveConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  validate(cfg, initial.n());
  detail::require_matching(initial, boundary);
  const double h = initial.domain().min_spacing();
  const double dt = effective_dt_factor(cfg, initial.n()) * h * h;

  SolveResult out{initial, {}};
  out.report.method = SolveMethod::mcf;
  try {
    for (;;) {
      const std::vector<double> vel = flow_velocity(out.field, cfg.velocity);
      const double sup = detail::interior_sup(out.field.domain(), out.field.m(), vel);
      if (sup < cfg.tol) {
        out.report.converged = true;
        break;
      }
      if (static_cast<int>(out.report.history.size()) >= cfg.max_iter) {
        out.report.message = "max_iter reached before the velocity fell below tol";
        break;
      }
      out.report.history.push_back(field_summary(out.field, sup));
      out.field = mcf_step(out.field, dt, cfg.velocity, &vel);
    }
  } catch (const Error& e) {
    out.report.converged = false;
    out.report.message = e.what();
  }
  detail::finish_report(out.report, out.field, start);
  return out;
}

namespace detail {

/// Sparse Jacobian of the divergence residual with respect to interior
/// nodal values, by complex-step differencing. Nodes sharing a color are at
/// least three cells apart in some axis, so their stencils do not overlap.
inline Eigen::SparseMatrix<double> residual_jacobian(const VectorField& field,
                                                     const std::vector<long>& unknown,
                                                     long count) {
  using Complex = std::complex<double>;
  constexpr double kStep = 1e-30;
  const GridDomain& dom = field.domain();
  const int n = dom.n();
  const int m = field.m();
  int colors = 1;
  for (int k = 0; k < n; ++k) colors *= 3;

  std::vector<int> color(dom.node_count());
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    const NodeCoords c = dom.coords(p);
    int col = 0;
    for (int k = n - 1; k >= 0; --k) col = col * 3 + c[k] % 3;
    color[p] = col;
  }

  std::vector<Complex> perturbed(field.values().size());
  std::vector<Complex> residual(field.values().size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(count) * m * colors);

  for (int col = 0; col < colors; ++col) {
    for (int beta = 0; beta < m; ++beta) {
      for (std::size_t k = 0; k < perturbed.size(); ++k) perturbed[k] = field.values()[k];
      bool any = false;
      for (NodeIndex q = 0; q < dom.node_count(); ++q) {
        if (unknown[q] < 0 || color[q] != col) continue;
        perturbed[q * m + beta] += Complex(0.0, kStep);
        any = true;
      }
      if (!any) continue;
      divergence_residual_into(dom, m, perturbed.data(), residual.data());
      for (NodeIndex q = 0; q < dom.node_count(); ++q) {
        if (unknown[q] < 0 || color[q] != col) continue;
        const NodeCoords cq = dom.coords(q);
        // Visit the 3^n neighborhood of q.
        for (int off = 0; off < colors; ++off) {
          NodeCoords cp = cq;
          int rem = off;
          bool inside = true;
          for (int k = 0; k < n; ++k) {
            cp[k] += rem % 3 - 1;
            rem /= 3;
            inside = inside && cp[k] >= 0 && cp[k] < dom.resolution(k);
          }
          if (!inside) continue;
          const NodeIndex p = dom.index(cp);
          if (unknown[p] < 0) continue;
          for (int a = 0; a < m; ++a) {
            const double d = residual[p * m + a].imag() / kStep;
            if (d != 0.0) triplets.emplace_back(unknown[p] * m + a, unknown[q] * m + beta, d);
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<double> jac(count * m, count * m);
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

}  // namespace detail

/// Damped Newton on the divergence residual with continuation in the
/// boundary data: stage k solves with boundary (k / K) phi, warm-started from
/// the previous stage. Throws on line-search stagnation or a failed linear
/// solve.
inline SolveResult newton_solve(const VectorField& initial, const BoundaryData& boundary,
                                const SolveConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  validate(cfg, initial.n());
  detail::require_matching(initial, boundary);
  constexpr int kMaxBacktracks = 30;
  constexpr double kLinearTolerance = 1e-10;

  const GridDomain& dom = initial.domain();
  const int m = initial.m();
  std::vector<long> unknown(dom.node_count(), -1);
  long count = 0;
  for (NodeIndex p = 0; p < dom.node_count(); ++p)
    if (dom.is_interior(p)) unknown[p] = count++;

  SolveResult out{initial, {}};
  out.report.method = SolveMethod::newton;
  const int stages = cfg.continuation_steps;

  std::vector<double> values(initial.values().begin(), initial.values().end());
  for (int stage = 1; stage <= stages; ++stage) {
    const double s = static_cast<double>(stage) / stages;
    // Predictor: rescale the previous stage's solution (the initial field for
    // the first stage) to the new boundary scale.
    const double ratio = stage == 1 ? s : s / (static_cast<double>(stage - 1) / stages);
    if (ratio != 1.0)
      for (double& v : values) v *= ratio;
    if (stage == stages) {
      boundary.apply(values);
    } else {
      boundary.scaled(s).apply(values);
    }
    VectorField current(dom, m, values);
    std::vector<double> r = divergence_residual(current);
    double sup = detail::interior_sup(dom, m, r);

    while (sup >= cfg.tol) {
      if (static_cast<int>(out.report.history.size()) >= cfg.max_iter) {
        out.field = current;
        out.report.message = "max_iter reached before the residual fell below tol";
        detail::finish_report(out.report, out.field, start);
        return out;
      }
      out.report.history.push_back(field_summary(current, sup));

      const Eigen::SparseMatrix<double> jac = detail::residual_jacobian(current, unknown, count);
      Eigen::VectorXd rhs(count * m);
      for (NodeIndex p = 0; p < dom.node_count(); ++p) {
        if (unknown[p] < 0) continue;
        for (int a = 0; a < m; ++a) rhs(unknown[p] * m + a) = -r[p * m + a];
      }
      Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> linear;
      linear.preconditioner().setDroptol(1e-6);
      linear.preconditioner().setFillfactor(20);
      linear.setTolerance(kLinearTolerance);
      linear.setMaxIterations(static_cast<Eigen::Index>(count * m));
      linear.compute(jac);
      if (linear.info() != Eigen::Success) {
        throw Error(ErrorCode::singular_linearization,
                    "Newton linearization could not be factored; try more continuation steps");
      }
      const Eigen::VectorXd delta = linear.solve(rhs);
      if (linear.info() != Eigen::Success || !delta.allFinite()) {
        throw Error(ErrorCode::singular_linearization,
                    "Newton linear step did not converge; try more continuation steps");
      }

      double step = 1.0;
      bool accepted = false;
      for (int tries = 0; tries < kMaxBacktracks; ++tries) {
        std::vector<double> trial = values;
        for (NodeIndex p = 0; p < dom.node_count(); ++p) {
          if (unknown[p] < 0) continue;
          for (int a = 0; a < m; ++a) trial[p * m + a] += step * delta(unknown[p] * m + a);
        }
        bool finite = true;
        for (double v : trial) finite = finite && std::isfinite(v);
        if (finite) {
          VectorField candidate(dom, m, trial);
          std::vector<double> rt = divergence_residual(candidate);
          const double sup_t = detail::interior_sup(dom, m, rt);
          if (sup_t < sup) {
            values = std::move(trial);
            current = std::move(candidate);
            r = std::move(rt);
            sup = sup_t;
            accepted = true;
            break;
          }
        }
        step *= cfg.damping;
      }
      if (!accepted) {
        throw Error(ErrorCode::stagnation,
                    "Newton line search failed to reduce the residual after " +
                        std::to_string(kMaxBacktracks) + " backtracks (residual " +
                        std::to_string(sup) + ")");
      }
    }
    out.field = current;
  }
  out.report.converged = true;
  detail::finish_report(out.report, out.field, start);
  return out;
}

inline SolveResult solve(const VectorField& initial, const BoundaryData& boundary,
                         const SolveConfig& cfg) {
  return cfg.method == SolveMethod::mcf ? mcf_solve(initial, boundary, cfg)
                                        : newton_solve(initial, boundary, cfg);
}

}  // namespace mss
