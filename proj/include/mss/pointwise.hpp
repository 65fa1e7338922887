#pragma once

// Pointwise geometry of the graph of a linear map L : R^n -> R^m.
//
// Everything here is a pure function of a single Jacobian (at most 4x4), so
// all storage is fixed-capacity and nothing allocates.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "mss/error.hpp"

namespace mss {

inline constexpr int kMaxDim = 4;

using SmallMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using FrameVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2 * kMaxDim, 1>;

/// The differential df at a point: an m x n matrix with entry (alpha, i) =
/// d f^alpha / d x^i. Domain dimension n in [2, 4], codimension m in [1, 4].
class Jacobian {
 public:
  Jacobian() : Jacobian(SmallMatrix::Zero(1, 2)) {}

  explicit Jacobian(const SmallMatrix& entries) : entries_(entries) {
    if (entries.cols() < 2 || entries.cols() > kMaxDim || entries.rows() < 1 ||
        entries.rows() > kMaxDim) {
      throw Error(ErrorCode::dimension_mismatch,
                  "Jacobian must be m x n with 1 <= m <= 4 and 2 <= n <= 4, got " +
                      std::to_string(entries.rows()) + " x " + std::to_string(entries.cols()));
    }
    if (!entries.allFinite()) {
      throw Error(ErrorCode::invalid_argument, "Jacobian has non-finite entries");
    }
  }

  static Jacobian zero(int m, int n) { return Jacobian(SmallMatrix::Zero(m, n)); }

  int n() const { return static_cast<int>(entries_.cols()); }
  int m() const { return static_cast<int>(entries_.rows()); }
  double operator()(int alpha, int i) const { return entries_(alpha, i); }
  const SmallMatrix& matrix() const { return entries_; }

 private:
  SmallMatrix entries_;
};

/// J v_i = lambda_i u_i. `lambdas` holds min(n, m) values in descending order;
/// the right basis has n vectors (columns), the left basis m vectors.
struct SingularDecomposition {
  SmallVector lambdas;
  SmallMatrix right_basis;
  SmallMatrix left_basis;
};

struct MetricData {
  SmallMatrix g;
  SmallMatrix g_inv;
  double sqrt_g = 1.0;
  double star_omega = 1.0;
};

/// Heights of the tangent plane on the two factors of G(2,2).
struct GrassmannPoint {
  double omega1 = 0.0;
  double omega2 = 0.0;
};

/// Orthonormal frames of R^{n+m} adapted to the singular value decomposition:
/// columns are tangent (n of them) and normal (m of them) vectors.
struct AdaptedFrames {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2 * kMaxDim, kMaxDim>
      tangent;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2 * kMaxDim, kMaxDim>
      normal;
};

/// Real array indexed (alpha, i, j) with alpha < m and i, j < n.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int m, int n) : m_(m), n_(n) {
    if (m < 1 || m > kMaxDim || n < 1 || n > kMaxDim) {
      throw Error(ErrorCode::dimension_mismatch, "Tensor3 dimensions out of range");
    }
  }

  int m() const { return m_; }
  int n() const { return n_; }
  double& operator()(int alpha, int i, int j) { return data_[(alpha * kMaxDim + i) * kMaxDim + j]; }
  double operator()(int alpha, int i, int j) const {
    return data_[(alpha * kMaxDim + i) * kMaxDim + j];
  }

  double squared_norm() const {
    double sum = 0.0;
    for (int a = 0; a < m_; ++a)
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) sum += (*this)(a, i, j) * (*this)(a, i, j);
    return sum;
  }

 private:
  int m_ = 1;
  int n_ = 1;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

/// Second fundamental form coefficients h_{alpha i j} in adapted frames:
/// alpha indexes normal frame vectors, (i, j) tangent frame vectors.
struct ShapeTensor {
  Tensor3 h;

  double squared_norm() const { return h.squared_norm(); }
};

namespace detail {

inline constexpr double kJacobiTolerance = 1e-14;
inline constexpr int kMaxJacobiSweeps = 80;
inline constexpr double kSignThreshold = 1e-12;

/// Index of the first component whose magnitude exceeds the sign threshold.
template <class Vec>
int first_significant(const Vec& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (int k = 0; k < v.size(); ++k) {
    if (std::abs(v(k)) > kSignThreshold * std::max(scale, 1.0)) return k;
  }
  return 0;
}

/// Extends the first `filled` orthonormal columns of `basis` to a full
/// orthonormal basis by Gram-Schmidt against the coordinate vectors.
inline void complete_basis(SmallMatrix& basis, int filled) {
  const int dim = static_cast<int>(basis.rows());
  for (int k = filled; k < dim; ++k) {
    SmallVector best;
    double best_norm = -1.0;
    for (int e = 0; e < dim; ++e) {
      SmallVector candidate = SmallVector::Unit(dim, e);
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < k; ++j) candidate -= basis.col(j).dot(candidate) * basis.col(j);
      }
      const double norm = candidate.norm();
      if (norm > best_norm + 1e-12) {
        best_norm = norm;
        best = candidate;
      }
    }
    basis.col(k) = best / best_norm;
    if (basis(first_significant(basis.col(k)), k) < 0.0) basis.col(k) *= -1.0;
  }
}

}  // namespace detail

/// One-sided Jacobi SVD. Each pair rotation is the closed-form 2x2
/// diagonalization of the column Gram block; sweeps stop once every
/// off-diagonal Gram entry is below 1e-14 relative to its column norms.
inline SingularDecomposition svd(const Jacobian& jac) {
  const int m = jac.m();
  const int n = jac.n();
  SmallMatrix work = jac.matrix();
  SmallMatrix v = SmallMatrix::Identity(n, n);

  for (int sweep = 0; sweep < detail::kMaxJacobiSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double alpha = work.col(p).squaredNorm();
        const double beta = work.col(q).squaredNorm();
        const double gamma = work.col(p).dot(work.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= detail::kJacobiTolerance * std::sqrt(alpha * beta)) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < m; ++r) {
          const double a = work(r, p);
          const double b = work(r, q);
          work(r, p) = c * a - s * b;
          work(r, q) = s * a + c * b;
        }
        for (int r = 0; r < n; ++r) {
          const double a = v(r, p);
          const double b = v(r, q);
          v(r, p) = c * a - s * b;
          v(r, q) = s * a + c * b;
        }
      }
    }
    if (!rotated) break;
  }

  std::array<double, kMaxDim> norms{};
  std::array<int, kMaxDim> order{};
  for (int k = 0; k < n; ++k) norms[k] = work.col(k).norm();
  std::iota(order.begin(), order.begin() + n, 0);
  std::stable_sort(order.begin(), order.begin() + n,
                   [&](int a, int b) { return norms[a] > norms[b]; });

  const int rank_cap = std::min(n, m);
  SingularDecomposition out;
  out.lambdas = SmallVector::Zero(rank_cap);
  out.right_basis = SmallMatrix::Zero(n, n);
  out.left_basis = SmallMatrix::Zero(m, m);

  int filled = 0;
  for (int k = 0; k < n; ++k) {
    const int src = order[k];
    out.right_basis.col(k) = v.col(src);
    const bool flip = out.right_basis(detail::first_significant(out.right_basis.col(k)), k) < 0.0;
    if (flip) out.right_basis.col(k) *= -1.0;
    if (k < rank_cap) {
      out.lambdas(k) = norms[src];
      // A leading run of nonzero singular values determines the left vectors;
      // the rest is completed below.
      if (norms[src] > 1e-300 && filled == k) {
        out.left_basis.col(k) = work.col(src) / norms[src];
        if (flip) out.left_basis.col(k) *= -1.0;
        ++filled;
      }
    }
  }
  detail::complete_basis(out.left_basis, filled);
  return out;
}

inline double op_norm(const Jacobian& jac) { return svd(jac).lambdas(0); }

inline double wedge2_norm_from(const SmallVector& lambdas) {
  return lambdas.size() < 2 ? 0.0 : lambdas(0) * lambdas(1);
}

/// |wedge^2 J| = lambda_1 lambda_2; zero whenever min(n, m) = 1.
inline double wedge2_norm(const Jacobian& jac) { return wedge2_norm_from(svd(jac).lambdas); }

inline MetricData metric(const Jacobian& jac) {
  const int n = jac.n();
  MetricData out;
  out.g = SmallMatrix::Identity(n, n) + jac.matrix().transpose() * jac.matrix();
  Eigen::LLT<SmallMatrix> llt(out.g);
  out.g_inv = llt.solve(SmallMatrix::Identity(n, n));
  double sqrt_g = 1.0;
  for (int i = 0; i < n; ++i) sqrt_g *= llt.matrixL()(i, i);
  out.sqrt_g = sqrt_g;
  out.star_omega = 1.0 / sqrt_g;
  return out;
}

inline double star_omega_from(const SmallVector& lambdas) {
  double prod = 1.0;
  for (int i = 0; i < lambdas.size(); ++i) prod *= 1.0 + lambdas(i) * lambdas(i);
  return 1.0 / std::sqrt(prod);
}

inline void require_2x2(const Jacobian& jac) {
  if (jac.n() != 2 || jac.m() != 2) {
    throw Error(ErrorCode::dimension_mismatch,
                "Grassmannian forms are defined only for n = m = 2, got m = " +
                    std::to_string(jac.m()) + ", n = " + std::to_string(jac.n()));
  }
}

/// omega_1, omega_2 on the tangent plane of the graph, with the target
/// orientation chosen so that dy^1 ^ dy^2 >= 0 on the plane. In terms of the
/// singular values:
///   omega_1 = (1 - l1 l2) / (sqrt2 sqrt((1 + l1^2)(1 + l2^2)))
///   omega_2 = (1 + l1 l2) / (sqrt2 sqrt((1 + l1^2)(1 + l2^2)))
/// so omega_1 > 0 exactly when |wedge^2 J| < 1.
inline GrassmannPoint grassmann_forms(const Jacobian& jac) {
  require_2x2(jac);
  const SmallVector lambdas = svd(jac).lambdas;
  const double l1 = lambdas(0);
  const double l2 = lambdas(1);
  const double product = l1 * l2;
  const double denom = std::sqrt(2.0) * std::sqrt((1.0 + l1 * l1) * (1.0 + l2 * l2));
  return {(1.0 - product) / denom, (1.0 + product) / denom};
}

/// Direct evaluation of the two 2-forms on the oriented unit tangent plane of
/// the graph of J in R^2 (+) R^2. For det J < 0 the roles of omega_1 and
/// omega_2 swap relative to grassmann_forms; area-decreasing is then
/// equivalent to both being positive.
inline GrassmannPoint oriented_grassmann_forms(const Jacobian& jac) {
  require_2x2(jac);
  const MetricData md = metric(jac);
  // The coordinate tangent vectors (e_i, J e_i) span a parallelogram of area
  // sqrt(g); their x-part has determinant 1 and their y-part det J.
  const double dx = 1.0 / md.sqrt_g;
  const double dy = jac.matrix().determinant() / md.sqrt_g;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  return {inv_sqrt2 * (dx - dy), inv_sqrt2 * (dx + dy)};
}

/// E_i = (v_i, lambda_i u_i) / sqrt(1 + lambda_i^2), N_a = (-lambda_a v_a, u_a) /
/// sqrt(1 + lambda_a^2), with lambda = 0 past min(n, m).
inline AdaptedFrames adapted_frames(const Jacobian& jac, const SingularDecomposition& sd) {
  const int n = jac.n();
  const int m = jac.m();
  const int rank_cap = std::min(n, m);
  AdaptedFrames out;
  out.tangent.setZero(n + m, n);
  out.normal.setZero(n + m, m);
  for (int i = 0; i < n; ++i) {
    const double lambda = i < rank_cap ? sd.lambdas(i) : 0.0;
    const double scale = 1.0 / std::sqrt(1.0 + lambda * lambda);
    out.tangent.col(i).head(n) = scale * sd.right_basis.col(i);
    if (i < m) out.tangent.col(i).tail(m) = scale * lambda * sd.left_basis.col(i);
  }
  for (int a = 0; a < m; ++a) {
    const double lambda = a < rank_cap ? sd.lambdas(a) : 0.0;
    const double scale = 1.0 / std::sqrt(1.0 + lambda * lambda);
    if (a < n) out.normal.col(a).head(n) = -scale * lambda * sd.right_basis.col(a);
    out.normal.col(a).tail(m) = scale * sd.left_basis.col(a);
  }
  return out;
}

inline AdaptedFrames adapted_frames(const Jacobian& jac) { return adapted_frames(jac, svd(jac)); }

/// -sum h_{alk}^2 - sum_{i,j,k} lambda_i lambda_j h_{i j k} h_{j i k}, where
/// the cross term pairs normal index i with tangent index i through the SVD
/// (i, j < min(n, m)). Non-positive whenever lambda_i lambda_j <= 1 for i != j.
inline double identity_rhs(const SmallVector& lambdas, const ShapeTensor& shape) {
  const Tensor3& h = shape.h;
  const int rank_cap = std::min<int>(static_cast<int>(lambdas.size()), std::min(h.m(), h.n()));
  double cross = 0.0;
  for (int i = 0; i < rank_cap; ++i) {
    for (int j = 0; j < rank_cap; ++j) {
      const double weight = lambdas(i) * lambdas(j);
      if (weight == 0.0) continue;
      for (int k = 0; k < h.n(); ++k) cross += weight * h(i, j, k) * h(j, i, k);
    }
  }
  return -h.squared_norm() - cross;
}

}  // namespace mss
