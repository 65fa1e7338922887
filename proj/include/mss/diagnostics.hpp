#pragma once

// Audits of solved (or given) fields: area-decreasing condition, the
// Laplacian identity for ln *Omega, superharmonicity and its gradient-weighted
// strengthening, the Gauss map hemisphere condition, a minimum principle for
// *Omega, and an empirical interior gradient bound.
//
// Continuum statements are checked against a discretization budget
//   tau(h) = c_check * h * sup|A|^2 + tau_floor,
// with sup|A|^2 taken over the audited nodes, and only on nodes at least
// `collar` grid steps from the boundary.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mss/graph_calculus.hpp"
#include "mss/grid.hpp"
#include "mss/pointwise.hpp"

namespace mss {

struct AuditConfig {
  double c_check = 10.0;
  double tau_floor = 1e-10;
  int collar = 2;
  double solution_tol = 1e-6;  // divergence residual sup-norm that counts as solved
  bool area_decreasing = true;
  bool superharmonicity = true;
  bool identity = true;
  bool gauss_map = true;
  bool min_principle = true;
  bool gradient_bound = false;
};

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

struct AuditCheck {
  std::string name;
  bool informational = false;  // reported without pass/fail
  bool passed = true;
  NodeIndex worst_node = kNoNode;
  double worst_value = 0.0;
  double tolerance = 0.0;
  std::string note;
};

/// Per-node diagnostic columns; NaN where a quantity is not defined.
struct NodeDiagnostics {
  std::vector<double> wedge2;
  std::vector<double> star_omega;
  std::vector<double> lhs31;
  std::vector<double> rhs31;
  std::vector<double> omega1;
  std::vector<double> omega2;
};

struct AuditReport {
  bool solution = false;  // divergence residual below solution_tol
  double residual_sup = 0.0;
  double h = 0.0;
  double tau = 0.0;
  std::vector<AuditCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AuditCheck& c) { return c.informational || c.passed; });
  }
  const AuditCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct AreaDecreasingResult {
  double sup_wedge2 = 0.0;
  NodeIndex worst_node = kNoNode;
  std::vector<NodeIndex> violations;
};

/// sup of |wedge^2 df| over interior nodes; violations are nodes with value >= 1.
inline AreaDecreasingResult area_decreasing_audit(const VectorField& field) {
  AreaDecreasingResult out;
  const GridDomain& dom = field.domain();
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    const double w = wedge2_norm(compute_jet(field, p).first);
    if (out.worst_node == kNoNode || w > out.sup_wedge2) {
      out.sup_wedge2 = w;
      out.worst_node = p;
    }
    if (w >= 1.0) out.violations.push_back(p);
  }
  return out;
}

/// Everything the continuum checks need, computed once per field.
struct FieldAnalysis {
  GridDomain domain;
  int m = 1;
  double residual_sup = 0.0;
  double sup_wedge2 = 0.0;
  std::vector<NodeIndex> audited;     // interior nodes outside the collar
  std::vector<NodeShape> shapes;      // indexed by node, interior only
  std::vector<double> log_star_omega; // per node (0 off the interior)
  std::vector<double> laplacian;      // Laplace-Beltrami of ln *Omega
  std::vector<double> grad_sq;        // g^{ij} d_i u d_j u for u = ln *Omega
  std::vector<double> rhs;            // identity_rhs per node
  double sup_shape_sq = 0.0;          // sup |A|^2 over audited nodes
  int tied_nodes = 0;                 // audited nodes with lambda gaps <= 1e-6
};

inline FieldAnalysis analyze(const VectorField& field, const AuditConfig& cfg) {
  const GridDomain& dom = field.domain();
  const int n = dom.n();
  FieldAnalysis out;
  out.domain = dom;
  out.m = field.m();
  out.residual_sup = detail::interior_sup(dom, field.m(), divergence_residual(field));
  out.shapes.resize(dom.node_count());
  out.log_star_omega.assign(dom.node_count(), 0.0);
  out.laplacian.assign(dom.node_count(), 0.0);
  out.grad_sq.assign(dom.node_count(), 0.0);
  out.rhs.assign(dom.node_count(), 0.0);

  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    out.shapes[p] = node_shape(field, p);
    out.log_star_omega[p] = std::log(out.shapes[p].metric.star_omega);
    out.rhs[p] = identity_rhs(out.shapes[p].svd.lambdas, out.shapes[p].shape);
    out.sup_wedge2 = std::max(out.sup_wedge2, wedge2_norm_from(out.shapes[p].svd.lambdas));
    if (dom.boundary_distance(p) >= cfg.collar) out.audited.push_back(p);
  }
  out.laplacian = laplace_beltrami(out.log_star_omega, field);
  for (NodeIndex p : out.audited) {
    // Central differences of u reach only interior nodes outside a collar >= 2.
    const MetricData& md = out.shapes[p].metric;
    SmallVector du(n);
    for (int i = 0; i < n; ++i) {
      const std::size_t s = dom.stride(i);
      du(i) = (out.log_star_omega[p + s] - out.log_star_omega[p - s]) / (2.0 * dom.spacing(i));
    }
    out.grad_sq[p] = du.dot(md.g_inv * du);
    out.sup_shape_sq = std::max(out.sup_shape_sq, out.shapes[p].shape.squared_norm());
    const SmallVector& l = out.shapes[p].svd.lambdas;
    for (int i = 0; i + 1 < l.size(); ++i) {
      if (l(i) - l(i + 1) <= 1e-6) {
        ++out.tied_nodes;
        break;
      }
    }
  }
  return out;
}

inline double discretization_budget(const FieldAnalysis& fa, const AuditConfig& cfg) {
  return cfg.c_check * fa.domain.max_spacing() * fa.sup_shape_sq + cfg.tau_floor;
}

namespace detail {

/// Fills worst node/value with the maximum of `value` over the audited nodes.
template <class F>
void worst_over(const std::vector<NodeIndex>& nodes, AuditCheck& check, F&& value) {
  check.worst_node = kNoNode;
  for (NodeIndex p : nodes) {
    const double v = value(p);
    if (check.worst_node == kNoNode || v > check.worst_value) {
      check.worst_value = v;
      check.worst_node = p;
    }
  }
}

}  // namespace detail

/// Two checks: plain superharmonicity Delta ln *Omega <= tau and the stronger
/// Delta ln *Omega + |grad ln *Omega|_g^2 / n <= tau. Pass/fail only on
/// solutions that are area-decreasing; informational otherwise.
inline std::vector<AuditCheck> superharmonicity_check(const FieldAnalysis& fa,
                                                      const AuditConfig& cfg) {
  const double tau = discretization_budget(fa, cfg);
  const bool applicable = fa.residual_sup < cfg.solution_tol && fa.sup_wedge2 <= 1.0;
  const int n = fa.domain.n();

  AuditCheck plain{"superharmonicity", !applicable, true, kNoNode, 0.0, tau, {}};
  detail::worst_over(fa.audited, plain, [&](NodeIndex p) { return fa.laplacian[p]; });
  plain.passed = plain.worst_value <= tau;

  AuditCheck strong{"differential_inequality", !applicable, true, kNoNode, 0.0, tau, {}};
  detail::worst_over(fa.audited, strong,
                     [&](NodeIndex p) { return fa.laplacian[p] + fa.grad_sq[p] / n; });
  strong.passed = strong.worst_value <= tau;

  if (!applicable) {
    const std::string why = fa.residual_sup >= cfg.solution_tol ? "field is not a solution"
                                                                : "field is not area-decreasing";
    plain.note = strong.note = why + "; reported for information only";
  }
  return {plain, strong};
}

/// Codimension-one identity Delta *Omega + *Omega |A|^2 = 0, evaluated with
/// the discrete operators; returns sup |Delta *Omega + *Omega |A|^2| over the
/// audited nodes.
inline double codim_one_identity_gap(const VectorField& field, const FieldAnalysis& fa) {
  if (field.m() != 1) {
    throw Error(ErrorCode::dimension_mismatch, "the codimension-one identity needs m = 1");
  }
  std::vector<double> star(fa.domain.node_count(), 0.0);
  for (NodeIndex p = 0; p < fa.domain.node_count(); ++p)
    if (fa.domain.is_interior(p)) star[p] = fa.shapes[p].metric.star_omega;
  const std::vector<double> lap = laplace_beltrami(star, field);
  double gap = 0.0;
  for (NodeIndex p : fa.audited) {
    gap = std::max(gap, std::abs(lap[p] + star[p] * fa.shapes[p].shape.squared_norm()));
  }
  return gap;
}

struct IdentityResult {
  AuditCheck check;
  double sup_gap = 0.0;
  double mean_gap = 0.0;
};

/// Compares Delta ln *Omega with the algebraic right-hand side built from the
/// singular values and the second fundamental form. Nodes with tied singular
/// values are kept: the cross term is unchanged by any rotation of a tied
/// block that preserves J v_i = lambda_i u_i.
inline IdentityResult identity_check(const FieldAnalysis& fa, const AuditConfig& cfg) {
  const double tau = discretization_budget(fa, cfg);
  const bool applicable = fa.residual_sup < cfg.solution_tol;
  IdentityResult out;
  out.check = {"identity_31", !applicable, true, kNoNode, 0.0, tau, {}};
  double total = 0.0;
  detail::worst_over(fa.audited, out.check, [&](NodeIndex p) {
    const double gap = std::abs(fa.laplacian[p] - fa.rhs[p]);
    total += gap;
    return gap;
  });
  out.sup_gap = out.check.worst_value;
  out.mean_gap = fa.audited.empty() ? 0.0 : total / fa.audited.size();
  out.check.passed = out.sup_gap <= tau;
  out.check.note = "tied_nodes=" + std::to_string(fa.tied_nodes);
  if (!applicable) out.check.note += "; field is not a solution, reported for information only";
  return out;
}

/// Algebraic side only: identity_rhs <= 1e-12 |A|^2 at every audited node of
/// an area-decreasing field.
inline AuditCheck rhs_sign_check(const FieldAnalysis& fa) {
  AuditCheck c{"identity_rhs_nonpositive", fa.sup_wedge2 > 1.0, true, kNoNode, 0.0, 0.0, {}};
  detail::worst_over(fa.audited, c, [&](NodeIndex p) {
    return fa.rhs[p] - 1e-12 * fa.shapes[p].shape.squared_norm();
  });
  c.passed = fa.audited.empty() || c.worst_value <= 0.0;
  if (c.informational) c.note = "field is not area-decreasing; reported for information only";
  return c;
}

struct GaussMapResult {
  AuditCheck check;
  double min_omega1 = 0.0;
  double max_omega2_defect = 0.0;  // sup |omega2 - 1/sqrt2|
  int mismatches = 0;
};

/// n = m = 2 only: at every interior node, |wedge^2 df| < 1 iff omega1 > 0,
/// and iff both oriented forms are positive.
inline GaussMapResult gauss_map_audit(const VectorField& field) {
  const GridDomain& dom = field.domain();
  if (dom.n() != 2 || field.m() != 2) {
    throw Error(ErrorCode::dimension_mismatch, "Gauss map audit needs n = m = 2");
  }
  GaussMapResult out;
  out.check = {"gauss_map_hemispheres", false, true, kNoNode, 0.0, 0.0, {}};
  out.min_omega1 = std::numeric_limits<double>::infinity();
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    const Jacobian jac = compute_jet(field, p).first;
    const GrassmannPoint gp = grassmann_forms(jac);
    const GrassmannPoint oriented = oriented_grassmann_forms(jac);
    const bool area_decreasing = wedge2_norm(jac) < 1.0;
    if (area_decreasing != (gp.omega1 > 0.0) ||
        area_decreasing != (oriented.omega1 > 0.0 && oriented.omega2 > 0.0)) {
      ++out.mismatches;
    }
    if (gp.omega1 < out.min_omega1) {
      out.min_omega1 = gp.omega1;
      out.check.worst_node = p;
    }
    out.max_omega2_defect = std::max(out.max_omega2_defect, std::abs(gp.omega2 - std::sqrt(0.5)));
  }
  out.check.worst_value = out.min_omega1;
  out.check.passed = out.mismatches == 0;
  out.check.note = "mismatches=" + std::to_string(out.mismatches);
  return out;
}

/// min over interior nodes of *Omega >= min over the boundary-adjacent ring - tau.
inline AuditCheck min_principle_check(const FieldAnalysis& fa, const AuditConfig& cfg) {
  const double tau = discretization_budget(fa, cfg);
  const bool applicable = fa.residual_sup < cfg.solution_tol && fa.sup_wedge2 < 1.0;
  const GridDomain& dom = fa.domain;
  double interior_min = std::numeric_limits<double>::infinity();
  double ring_min = std::numeric_limits<double>::infinity();
  NodeIndex worst = kNoNode;
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    const double s = fa.shapes[p].metric.star_omega;
    if (dom.boundary_distance(p) == 1) ring_min = std::min(ring_min, s);
    if (s < interior_min) {
      interior_min = s;
      worst = p;
    }
  }
  AuditCheck c{"min_principle", !applicable, true, worst, ring_min - interior_min, tau, {}};
  c.passed = interior_min >= ring_min - tau;
  c.note = "interior_min=" + std::to_string(interior_min) + " ring_min=" + std::to_string(ring_min);
  if (!applicable) c.note += "; reported for information only";
  return c;
}

struct GradientBoundRow {
  NodeIndex node = 0;
  double df_norm = 0.0;  // operator norm |df(x0)|
  double f_norm = 0.0;   // |f(x0)|
  double distance = 0.0; // dist(x0, boundary)
};

struct GradientBoundReport {
  std::vector<GradientBoundRow> rows;
  double c1 = 0.0;
  double c2 = 0.0;
  double c1_without_growth = 0.0;  // smallest C1 when C2 = 0, i.e. sup |df|
};

/// Fits |df(x0)| <= C1 exp(C2 |f(x0)| / d) over the instance. C2 >= 0
/// minimizes max_x [ln|df| - C2 t] + C2 mean(t), t = |f| / d (convex in C2);
/// C1 is then the smallest constant making the bound hold at every node.
inline GradientBoundReport gradient_bound_report(const VectorField& field) {
  const GridDomain& dom = field.domain();
  for (double v : field.values()) {
    if (v < 0.0) {
      throw Error(ErrorCode::precondition,
                  "gradient bound report needs every component of f to be non-negative");
    }
  }
  GradientBoundReport out;
  std::vector<double> y;
  std::vector<double> t;
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    const JetSample jet = compute_jet(field, p);
    GradientBoundRow row{p, op_norm(jet.first), jet.value.norm(), dom.distance_to_boundary(p)};
    out.rows.push_back(row);
    out.c1_without_growth = std::max(out.c1_without_growth, row.df_norm);
    if (row.df_norm > 0.0) {
      y.push_back(std::log(row.df_norm));
      t.push_back(row.f_norm / row.distance);
    }
  }
  if (y.empty()) return out;  // |df| = 0 everywhere: any C1 > 0 works

  double t_mean = 0.0;
  for (double v : t) t_mean += v;
  t_mean /= static_cast<double>(t.size());
  auto envelope = [&](double c2) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < y.size(); ++k) best = std::max(best, y[k] - c2 * t[k]);
    return best;
  };
  auto objective = [&](double c2) { return envelope(c2) + c2 * t_mean; };

  double lo = 0.0;
  double hi = 1.0;
  while (hi < 1e6 && objective(2.0 * hi) < objective(hi)) hi *= 2.0;
  hi *= 2.0;
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double a = hi - golden * (hi - lo);
    const double b = lo + golden * (hi - lo);
    if (objective(a) <= objective(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  double c2 = 0.5 * (lo + hi);
  if (objective(0.0) <= objective(c2)) c2 = 0.0;
  out.c2 = c2;
  out.c1 = std::exp(envelope(c2));
  return out;
}

inline NodeDiagnostics node_diagnostics(const VectorField& field, const FieldAnalysis& fa) {
  const GridDomain& dom = field.domain();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t count = dom.node_count();
  NodeDiagnostics d{std::vector<double>(count, nan), std::vector<double>(count, nan),
                    std::vector<double>(count, nan), std::vector<double>(count, nan),
                    std::vector<double>(count, nan), std::vector<double>(count, nan)};
  const bool grassmann = dom.n() == 2 && field.m() == 2;
  for (NodeIndex p = 0; p < count; ++p) {
    if (!dom.is_interior(p)) continue;
    const NodeShape& s = fa.shapes[p];
    d.wedge2[p] = wedge2_norm_from(s.svd.lambdas);
    d.star_omega[p] = s.metric.star_omega;
    d.rhs31[p] = fa.rhs[p];
    if (grassmann) {
      const GrassmannPoint gp = grassmann_forms(s.jet.first);
      d.omega1[p] = gp.omega1;
      d.omega2[p] = gp.omega2;
    }
  }
  for (NodeIndex p : fa.audited) d.lhs31[p] = fa.laplacian[p];
  return d;
}

/// Runs every enabled check in a fixed order.
inline AuditReport run_audits(const VectorField& field, const AuditConfig& cfg,
                              FieldAnalysis* analysis_out = nullptr) {
  FieldAnalysis fa = analyze(field, cfg);
  AuditReport report;
  report.residual_sup = fa.residual_sup;
  report.solution = fa.residual_sup < cfg.solution_tol;
  report.h = field.domain().max_spacing();
  report.tau = discretization_budget(fa, cfg);

  if (cfg.area_decreasing) {
    const AreaDecreasingResult ad = area_decreasing_audit(field);
    AuditCheck c{"area_decreasing", false, ad.violations.empty(), ad.worst_node, ad.sup_wedge2,
                 1.0, "violations=" + std::to_string(ad.violations.size())};
    report.checks.push_back(c);
  }
  if (cfg.superharmonicity) {
    for (auto& c : superharmonicity_check(fa, cfg)) report.checks.push_back(c);
  }
  if (cfg.identity) {
    report.checks.push_back(identity_check(fa, cfg).check);
    report.checks.push_back(rhs_sign_check(fa));
  }
  if (cfg.gauss_map && field.n() == 2 && field.m() == 2) {
    report.checks.push_back(gauss_map_audit(field).check);
  }
  if (cfg.min_principle) report.checks.push_back(min_principle_check(fa, cfg));
  if (cfg.gradient_bound) {
    AuditCheck c{"gradient_bound", true, true, kNoNode, 0.0, 0.0, {}};
    try {
      const GradientBoundReport gb = gradient_bound_report(field);
      c.worst_value = gb.c1;
      c.note = "C1=" + std::to_string(gb.c1) + " C2=" + std::to_string(gb.c2);
    } catch (const Error& e) {
      c.note = e.what();
    }
    report.checks.push_back(c);
  }
  if (analysis_out) *analysis_out = std::move(fa);
  return report;
}

/// Least-squares slope of log(value) against log(h): the observed order.
/// Returns nullopt when any value is below `floor` (nothing to fit).
inline std::optional<double> observed_order(const std::vector<double>& h,
                                            const std::vector<double>& value,
                                            double floor = 1e-10) {
  if (h.size() != value.size() || h.size() < 2) return std::nullopt;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(value[k] > floor)) return std::nullopt;
    const double x = std::log(h[k]);
    const double y = std::log(value[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double count = static_cast<double>(h.size());
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

}  // namespace mss
