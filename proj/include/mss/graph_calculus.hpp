#pragma once

// Assembled geometry of the graph of a grid field: residuals of the minimal
// surface system, the Laplace-Beltrami operator of the induced metric, the
// second fundamental form and the discrete volume functional.
//
// Conservative operators use corner quadrature on grid cells. In each cell,
// every corner sees one compact difference per axis (the cell edge through
// that corner), giving a corner Jacobian J_k. The discrete volume is
//
//   V = sum_cells |cell| / 2^n sum_corners sqrt(det(I + J_k^T J_k)),
//
// and the divergence residual is its exact negative gradient per unit cell
// volume. Written out, it is a flux difference
//   R(p) = sum_i (F_i(p + e_i/2) - F_i(p - e_i/2)) / h_i,
// where each face flux averages sqrt(g) g^{ij} d_j f over the corners that use
// that edge.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "mss/grid.hpp"
#include "mss/pointwise.hpp"

namespace mss {

namespace detail {

using std::sqrt;

/// Writes a = sqrt(g) g^{-1} (n x n, row-major) for g = I + J^T J and returns
/// sqrt(g). `jac` is m x n row-major. Generic in the scalar so the residual can
/// be differentiated by complex step.
template <class Scalar>
Scalar scaled_inverse_metric(int n, int m, const Scalar* jac, Scalar* a) {
  Scalar g[kMaxGridDim][kMaxGridDim];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      Scalar s = i == j ? Scalar(1.0) : Scalar(0.0);
      for (int al = 0; al < m; ++al) s += jac[al * n + i] * jac[al * n + j];
      g[i][j] = s;
      g[j][i] = s;
    }
  }
  // Cholesky g = L L^T, stored in place in the lower triangle.
  Scalar l[kMaxGridDim][kMaxGridDim];
  Scalar sqrt_g(1.0);
  for (int j = 0; j < n; ++j) {
    Scalar d = g[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    l[j][j] = sqrt(d);
    sqrt_g *= l[j][j];
    for (int i = j + 1; i < n; ++i) {
      Scalar s = g[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  for (int col = 0; col < n; ++col) {
    Scalar y[kMaxGridDim];
    for (int i = 0; i < n; ++i) {
      Scalar s = i == col ? Scalar(1.0) : Scalar(0.0);
      for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
      y[i] = s / l[i][i];
    }
    Scalar x[kMaxGridDim];
    for (int i = n - 1; i >= 0; --i) {
      Scalar s = y[i];
      for (int k = i + 1; k < n; ++k) s -= l[k][i] * x[k];
      x[i] = s / l[i][i];
    }
    for (int i = 0; i < n; ++i) a[i * n + col] = sqrt_g * x[i];
  }
  return sqrt_g;
}

/// Visits every cell corner: `visit(edge_lo, edge_hi, jac)` where edge_lo[i],
/// edge_hi[i] are the endpoints of the axis-i edge used at that corner and
/// `jac` (m x n row-major) the corner Jacobian.
template <class Scalar, class Visit>
void for_each_corner(const GridDomain& dom, int m, const Scalar* values, Visit&& visit) {
  const int n = dom.n();
  const int corners = 1 << n;
  const int n0 = dom.resolution(0);
  const int n1 = dom.resolution(1);
  const int n2 = n == 3 ? dom.resolution(2) : 2;
  NodeIndex lo[kMaxGridDim];
  NodeIndex hi[kMaxGridDim];
  Scalar jac[kMaxDim * kMaxGridDim];
  for (int c2 = 0; c2 < n2 - 1; ++c2) {
    for (int c1 = 0; c1 < n1 - 1; ++c1) {
      for (int c0 = 0; c0 < n0 - 1; ++c0) {
        const NodeIndex origin = dom.index({c0, c1, c2});
        for (int bits = 0; bits < corners; ++bits) {
          NodeIndex corner = origin;
          for (int k = 0; k < n; ++k)
            if (bits & (1 << k)) corner += dom.stride(k);
          for (int i = 0; i < n; ++i) {
            lo[i] = (bits & (1 << i)) ? corner - dom.stride(i) : corner;
            hi[i] = lo[i] + dom.stride(i);
            const double inv_h = 1.0 / dom.spacing(i);
            for (int al = 0; al < m; ++al) {
              jac[al * n + i] = (values[hi[i] * m + al] - values[lo[i] * m + al]) * inv_h;
            }
          }
          visit(lo, hi, jac);
        }
      }
    }
  }
}

template <class Scalar>
void zero_boundary(const GridDomain& dom, int m, Scalar* out) {
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (dom.is_interior(p)) continue;
    for (int al = 0; al < m; ++al) out[p * m + al] = Scalar(0.0);
  }
}

/// Divergence-form residual of the minimal surface system on raw values;
/// `out` has node_count * m entries, zero on the boundary.
template <class Scalar>
void divergence_residual_into(const GridDomain& dom, int m, const Scalar* values, Scalar* out) {
  const int n = dom.n();
  const double corner_weight = 1.0 / static_cast<double>(1 << n);
  std::fill(out, out + dom.node_count() * m, Scalar(0.0));
  Scalar a[kMaxGridDim * kMaxGridDim];
  for_each_corner(dom, m, values,
                  [&](const NodeIndex* lo, const NodeIndex* hi, const Scalar* jac) {
                    scaled_inverse_metric(n, m, jac, a);
                    for (int i = 0; i < n; ++i) {
                      const double w = corner_weight / dom.spacing(i);
                      for (int al = 0; al < m; ++al) {
                        Scalar flux(0.0);
                        for (int j = 0; j < n; ++j) flux += a[i * n + j] * jac[al * n + j];
                        out[lo[i] * m + al] += w * flux;
                        out[hi[i] * m + al] -= w * flux;
                      }
                    }
                  });
  zero_boundary(dom, m, out);
}

inline double interior_sup(const GridDomain& dom, int m, std::span<const double> r) {
  double s = 0.0;
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    for (int al = 0; al < m; ++al) s = std::max(s, std::abs(r[p * m + al]));
  }
  return s;
}

inline double interior_l2(const GridDomain& dom, int m, std::span<const double> r) {
  double s = 0.0;
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    for (int al = 0; al < m; ++al) s += r[p * m + al] * r[p * m + al];
  }
  return std::sqrt(s * dom.cell_volume());
}

}  // namespace detail

/// Per-node geometry of the graph; entries at boundary nodes are unset.
struct NodeGeometry {
  MetricData metric;
  SingularDecomposition svd;
  double star_omega = 1.0;
  double log_star_omega = 0.0;
};

struct GeometryField {
  GridDomain domain;
  std::vector<NodeGeometry> nodes;  // indexed by node; meaningful on interior nodes
};

struct ResidualField {
  GridDomain domain;
  int m = 1;
  std::vector<double> r_div;   // node * m + alpha
  std::vector<double> r_perp;  // node * m + alpha
  double div_sup = 0.0;
  double div_l2 = 0.0;
  double perp_sup = 0.0;
  double perp_l2 = 0.0;
};

inline GeometryField geometry_field(const VectorField& field) {
  GeometryField out{field.domain(), std::vector<NodeGeometry>(field.domain().node_count())};
  for (NodeIndex p = 0; p < field.domain().node_count(); ++p) {
    if (!field.domain().is_interior(p)) continue;
    const JetSample jet = compute_jet(field, p);
    NodeGeometry& ng = out.nodes[p];
    ng.metric = metric(jet.first);
    ng.svd = svd(jet.first);
    ng.star_omega = ng.metric.star_omega;
    ng.log_star_omega = std::log(ng.star_omega);
  }
  return out;
}

/// Flux-form discretization of sum_i d_i(sqrt(g) g^{ij} d_j f^alpha), zero on
/// boundary nodes.
inline std::vector<double> divergence_residual(const VectorField& field) {
  std::vector<double> out(field.values().size());
  detail::divergence_residual_into(field.domain(), field.m(), field.values().data(), out.data());
  return out;
}

/// Non-divergence operator g^{ij} d_i d_j f^alpha from central-difference jets.
inline std::vector<double> mcf_velocity(const VectorField& field) {
  const GridDomain& dom = field.domain();
  const int n = dom.n();
  const int m = field.m();
  std::vector<double> out(field.values().size(), 0.0);
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    const JetSample jet = compute_jet(field, p);
    const MetricData md = metric(jet.first);
    for (int al = 0; al < m; ++al) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += md.g_inv(i, j) * jet.second(al, i, j);
      out[p * m + al] = s;
    }
  }
  return out;
}

/// The same continuum velocity g^{ij} d_i d_j f, recovered from the
/// divergence-form residual through g^{ij} f_ij = (I + J J^T) R / sqrt(g).
/// Its zeros are exactly the zeros of divergence_residual.
inline std::vector<double> conservative_velocity(const VectorField& field) {
  const GridDomain& dom = field.domain();
  const int m = field.m();
  const std::vector<double> r = divergence_residual(field);
  std::vector<double> out(r.size(), 0.0);
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    const JetSample jet = compute_jet(field, p);
    const SmallMatrix& jac = jet.first.matrix();
    const MetricData md = metric(jet.first);
    SmallVector rp(m);
    for (int al = 0; al < m; ++al) rp(al) = r[p * m + al];
    const SmallVector vel = (rp + jac * (jac.transpose() * rp)) * md.star_omega;
    for (int al = 0; al < m; ++al) out[p * m + al] = vel(al);
  }
  return out;
}

/// Normal components <(0, g^{ij} f_ij), N_alpha> of the mean curvature
/// vector in the adapted normal frame.
inline std::vector<double> normal_residual(const VectorField& field) {
  const GridDomain& dom = field.domain();
  const int m = field.m();
  const std::vector<double> vel = mcf_velocity(field);
  std::vector<double> out(vel.size(), 0.0);
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) continue;
    const JetSample jet = compute_jet(field, p);
    const AdaptedFrames frames = adapted_frames(jet.first);
    for (int al = 0; al < m; ++al) {
      double s = 0.0;
      for (int b = 0; b < m; ++b) s += frames.normal(dom.n() + b, al) * vel[p * m + b];
      out[p * m + al] = s;
    }
  }
  return out;
}

inline ResidualField residual_field(const VectorField& field) {
  const GridDomain& dom = field.domain();
  ResidualField out{dom, field.m(), divergence_residual(field), normal_residual(field)};
  out.div_sup = detail::interior_sup(dom, field.m(), out.r_div);
  out.div_l2 = detail::interior_l2(dom, field.m(), out.r_div);
  out.perp_sup = detail::interior_sup(dom, field.m(), out.r_perp);
  out.perp_l2 = detail::interior_l2(dom, field.m(), out.r_perp);
  return out;
}

/// (1/sqrt(g)) d_i(sqrt(g) g^{ij} d_j u) on interior nodes, flux form with the
/// same corner coefficients as the divergence residual. `u` has one value per
/// node; the result is zero on boundary nodes.
inline std::vector<double> laplace_beltrami(std::span<const double> u, const VectorField& field) {
  const GridDomain& dom = field.domain();
  if (u.size() != dom.node_count()) {
    throw Error(ErrorCode::dimension_mismatch, "scalar function size does not match the grid");
  }
  const int n = dom.n();
  const int m = field.m();
  const double corner_weight = 1.0 / static_cast<double>(1 << n);
  std::vector<double> out(dom.node_count(), 0.0);
  double a[kMaxGridDim * kMaxGridDim];
  detail::for_each_corner(
      dom, m, field.values().data(), [&](const NodeIndex* lo, const NodeIndex* hi, const double* jac) {
        detail::scaled_inverse_metric(n, m, jac, a);
        double du[kMaxGridDim];
        for (int j = 0; j < n; ++j) du[j] = (u[hi[j]] - u[lo[j]]) / dom.spacing(j);
        for (int i = 0; i < n; ++i) {
          double flux = 0.0;
          for (int j = 0; j < n; ++j) flux += a[i * n + j] * du[j];
          const double w = corner_weight / dom.spacing(i);
          out[lo[i]] += w * flux;
          out[hi[i]] -= w * flux;
        }
      });
  for (NodeIndex p = 0; p < dom.node_count(); ++p) {
    if (!dom.is_interior(p)) {
      out[p] = 0.0;
      continue;
    }
    out[p] /= metric(compute_jet(field, p).first).sqrt_g;
  }
  return out;
}

/// Second fundamental form at an interior node, with the decomposition it was
/// expressed in.
struct NodeShape {
  JetSample jet;
  SingularDecomposition svd;
  MetricData metric;
  ShapeTensor shape;
};

/// h_{alpha k l} = <(0, f_ij), N_alpha> E_k^i E_l^j, where E_k^i are the
/// coordinate components of the adapted tangent frame:
/// E_k = sum_i (v_k)_i d_iF / sqrt(1 + lambda_k^2).
inline NodeShape node_shape(const VectorField& field, NodeIndex node) {
  NodeShape out{compute_jet(field, node), {}, {}, {}};
  const int n = field.n();
  const int m = field.m();
  const int rank_cap = std::min(n, m);
  out.svd = svd(out.jet.first);
  out.metric = metric(out.jet.first);
  out.shape.h = Tensor3(m, n);

  SmallVector tangent_scale(n);
  for (int k = 0; k < n; ++k) {
    const double lambda = k < rank_cap ? out.svd.lambdas(k) : 0.0;
    tangent_scale(k) = 1.0 / std::sqrt(1.0 + lambda * lambda);
  }
  // Hessian projected on each normal: P_alpha(i, j) = <(0, f_ij), N_alpha>.
  for (int al = 0; al < m; ++al) {
    const double lambda = al < rank_cap ? out.svd.lambdas(al) : 0.0;
    const double normal_scale = 1.0 / std::sqrt(1.0 + lambda * lambda);
    SmallMatrix proj = SmallMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int b = 0; b < m; ++b) s += out.svd.left_basis(b, al) * out.jet.second(b, i, j);
        proj(i, j) = normal_scale * s;
        proj(j, i) = proj(i, j);
      }
    }
    const SmallMatrix in_frame =
        out.svd.right_basis.transpose() * proj * out.svd.right_basis;
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) {
        const double value = tangent_scale(k) * tangent_scale(l) * in_frame(k, l);
        out.shape.h(al, k, l) = value;
        out.shape.h(al, l, k) = value;
      }
    }
  }
  return out;
}

inline ShapeTensor second_fundamental_form(const VectorField& field, NodeIndex node) {
  return node_shape(field, node).shape;
}

/// Corner-quadrature volume of the graph over the whole box.
inline double volume(const VectorField& field) {
  const GridDomain& dom = field.domain();
  const int n = dom.n();
  const int m = field.m();
  const double weight = dom.cell_volume() / static_cast<double>(1 << n);
  double total = 0.0;
  double a[kMaxGridDim * kMaxGridDim];
  detail::for_each_corner(dom, m, field.values().data(),
                          [&](const NodeIndex*, const NodeIndex*, const double* jac) {
                            total += weight * detail::scaled_inverse_metric(n, m, jac, a);
                          });
  return total;
}

}  // namespace mss
