#pragma once

// Box grids, grid-sampled vector fields and their finite-difference jets.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mss/error.hpp"
#include "mss/pointwise.hpp"

namespace mss {

inline constexpr int kMaxGridDim = 3;
inline constexpr int kMinResolution = 5;

using NodeIndex = std::size_t;
using NodeCoords = std::array<int, kMaxGridDim>;

/// Axis-aligned box [lower, upper] sampled with `resolution` nodes per axis.
/// Nodes are ordered lexicographically with axis 0 varying fastest.
class GridDomain {
 public:
  GridDomain() = default;

  GridDomain(int n, std::array<double, kMaxGridDim> lower, std::array<double, kMaxGridDim> upper,
             std::array<int, kMaxGridDim> resolution)
      : n_(n), lower_(lower), upper_(upper), resolution_(resolution) {
    if (n < 2 || n > kMaxGridDim) {
      throw Error(ErrorCode::dimension_mismatch,
                  "grid dimension must be 2 or 3, got " + std::to_string(n));
    }
    node_count_ = 1;
    for (int k = 0; k < n; ++k) {
      if (resolution[k] < kMinResolution) {
        throw Error(ErrorCode::too_coarse, "resolution too coarse: axis " + std::to_string(k) +
                                               " has " + std::to_string(resolution[k]) +
                                               " nodes, need at least " +
                                               std::to_string(kMinResolution));
      }
      if (!(upper[k] > lower[k]) || !std::isfinite(lower[k]) || !std::isfinite(upper[k])) {
        throw Error(ErrorCode::invalid_argument, "box must satisfy lower < upper on every axis");
      }
      spacing_[k] = (upper[k] - lower[k]) / (resolution[k] - 1);
      stride_[k] = node_count_;
      node_count_ *= static_cast<std::size_t>(resolution[k]);
    }
    for (int k = n; k < kMaxGridDim; ++k) {
      lower_[k] = upper_[k] = 0.0;
      resolution_[k] = 1;
      spacing_[k] = 0.0;
      stride_[k] = node_count_;
    }
  }

  /// Cube [lo, hi]^n with the same resolution on every axis.
  static GridDomain cube(int n, double lo, double hi, int resolution) {
    return GridDomain(n, {lo, lo, lo}, {hi, hi, hi}, {resolution, resolution, resolution});
  }

  int n() const { return n_; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  int resolution(int axis) const { return resolution_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  std::size_t node_count() const { return node_count_; }

  double min_spacing() const {
    double h = spacing_[0];
    for (int k = 1; k < n_; ++k) h = std::min(h, spacing_[k]);
    return h;
  }
  double max_spacing() const {
    double h = spacing_[0];
    for (int k = 1; k < n_; ++k) h = std::max(h, spacing_[k]);
    return h;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < n_; ++k) v *= spacing_[k];
    return v;
  }

  NodeCoords coords(NodeIndex node) const {
    NodeCoords c{0, 0, 0};
    for (int k = 0; k < n_; ++k) {
      c[k] = static_cast<int>(node % static_cast<std::size_t>(resolution_[k]));
      node /= static_cast<std::size_t>(resolution_[k]);
    }
    return c;
  }

  NodeIndex index(const NodeCoords& c) const {
    NodeIndex idx = 0;
    for (int k = n_ - 1; k >= 0; --k) idx = idx * resolution_[k] + c[k];
    return idx;
  }

  double coordinate(int axis, int i) const {
    return i == resolution_[axis] - 1 ? upper_[axis] : lower_[axis] + i * spacing_[axis];
  }

  std::array<double, kMaxGridDim> position(NodeIndex node) const {
    const NodeCoords c = coords(node);
    std::array<double, kMaxGridDim> x{0.0, 0.0, 0.0};
    for (int k = 0; k < n_; ++k) x[k] = coordinate(k, c[k]);
    return x;
  }

  /// Number of grid steps to the nearest boundary face (0 on the boundary).
  int boundary_distance(NodeIndex node) const {
    const NodeCoords c = coords(node);
    int d = resolution_[0];
    for (int k = 0; k < n_; ++k) d = std::min({d, c[k], resolution_[k] - 1 - c[k]});
    return d;
  }

  bool is_interior(NodeIndex node) const { return boundary_distance(node) > 0; }

  /// Euclidean distance from the node to the box boundary.
  double distance_to_boundary(NodeIndex node) const {
    const auto x = position(node);
    double d = upper_[0] - lower_[0];
    for (int k = 0; k < n_; ++k) d = std::min({d, x[k] - lower_[k], upper_[k] - x[k]});
    return d;
  }

  std::vector<NodeIndex> interior_nodes() const {
    std::vector<NodeIndex> out;
    for (NodeIndex p = 0; p < node_count_; ++p)
      if (is_interior(p)) out.push_back(p);
    return out;
  }

  std::vector<NodeIndex> boundary_nodes() const {
    std::vector<NodeIndex> out;
    for (NodeIndex p = 0; p < node_count_; ++p)
      if (!is_interior(p)) out.push_back(p);
    return out;
  }

  bool operator==(const GridDomain& other) const {
    return n_ == other.n_ && lower_ == other.lower_ && upper_ == other.upper_ &&
           resolution_ == other.resolution_;
  }

 private:
  int n_ = 2;
  std::array<double, kMaxGridDim> lower_{};
  std::array<double, kMaxGridDim> upper_{};
  std::array<int, kMaxGridDim> resolution_{1, 1, 1};
  std::array<double, kMaxGridDim> spacing_{};
  std::array<std::size_t, kMaxGridDim> stride_{};
  std::size_t node_count_ = 0;
};

/// Grid-sampled map f : D -> R^m. Value of component alpha at node p lives at
/// values()[p * m + alpha]. A field is an immutable snapshot; updates build a
/// new field.
class VectorField {
 public:
  VectorField() = default;

  VectorField(GridDomain domain, int m, std::vector<double> values)
      : domain_(std::move(domain)), m_(m), values_(std::move(values)) {
    if (m < 1 || m > kMaxDim) {
      throw Error(ErrorCode::dimension_mismatch,
                  "codimension must be in [1, 4], got " + std::to_string(m));
    }
    if (values_.size() != domain_.node_count() * static_cast<std::size_t>(m)) {
      throw Error(ErrorCode::dimension_mismatch, "field size does not match domain and m");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "field has non-finite values");
    }
  }

  static VectorField zeros(const GridDomain& domain, int m) {
    return VectorField(domain, m, std::vector<double>(domain.node_count() * m, 0.0));
  }

  const GridDomain& domain() const { return domain_; }
  int m() const { return m_; }
  int n() const { return domain_.n(); }
  std::span<const double> values() const { return values_; }
  double operator()(NodeIndex node, int alpha) const { return values_[node * m_ + alpha]; }

 private:
  GridDomain domain_;
  int m_ = 1;
  std::vector<double> values_;
};

/// Dirichlet data: the values of phi on every boundary node.
class BoundaryData {
 public:
  BoundaryData() = default;

  static BoundaryData from_field(const VectorField& field) {
    BoundaryData out;
    out.domain_ = field.domain();
    out.m_ = field.m();
    out.nodes_ = field.domain().boundary_nodes();
    out.values_.reserve(out.nodes_.size() * field.m());
    for (NodeIndex p : out.nodes_)
      for (int a = 0; a < field.m(); ++a) out.values_.push_back(field(p, a));
    return out;
  }

  const GridDomain& domain() const { return domain_; }
  int m() const { return m_; }
  const std::vector<NodeIndex>& nodes() const { return nodes_; }
  std::span<const double> values() const { return values_; }

  BoundaryData scaled(double s) const {
    BoundaryData out = *this;
    for (double& v : out.values_) v *= s;
    return out;
  }

  /// Overwrites the boundary entries of a raw value array.
  void apply(std::vector<double>& values) const {
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      for (int a = 0; a < m_; ++a) values[nodes_[k] * m_ + a] = values_[k * m_ + a];
  }

  /// True when `field` carries exactly these boundary values.
  bool matches(const VectorField& field) const {
    if (!(field.domain() == domain_) || field.m() != m_) return false;
    for (std::size_t k = 0; k < nodes_.size(); ++k)
      for (int a = 0; a < m_; ++a)
        if (field(nodes_[k], a) != values_[k * m_ + a]) return false;
    return true;
  }

 private:
  GridDomain domain_;
  int m_ = 1;
  std::vector<NodeIndex> nodes_;
  std::vector<double> values_;
};

/// Value, first and second derivatives of a field at one interior node.
struct JetSample {
  SmallVector value;
  Jacobian first;
  Tensor3 second;
};

/// Second-order central differences. Mixed partials use the symmetric
/// four-point cross stencil and are stored once for both (i, j) and (j, i).
inline JetSample compute_jet(const VectorField& field, NodeIndex node) {
  const GridDomain& dom = field.domain();
  if (node >= dom.node_count() || !dom.is_interior(node)) {
    throw Error(ErrorCode::boundary_node,
                "jets are only defined at interior nodes (node " + std::to_string(node) + ")");
  }
  const int n = dom.n();
  const int m = field.m();
  const auto v = field.values();
  auto at = [&](NodeIndex p, int a) { return v[p * m + a]; };

  JetSample jet;
  jet.value = SmallVector(m);
  SmallMatrix first(m, n);
  jet.second = Tensor3(m, n);
  for (int a = 0; a < m; ++a) jet.value(a) = at(node, a);

  for (int i = 0; i < n; ++i) {
    const std::size_t si = dom.stride(i);
    const double hi = dom.spacing(i);
    for (int a = 0; a < m; ++a) {
      const double fp = at(node + si, a);
      const double fm = at(node - si, a);
      const double f0 = at(node, a);
      first(a, i) = (fp - fm) / (2.0 * hi);
      jet.second(a, i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    }
    for (int j = i + 1; j < n; ++j) {
      const std::size_t sj = dom.stride(j);
      const double hj = dom.spacing(j);
      for (int a = 0; a < m; ++a) {
        const double mixed = (at(node + si + sj, a) - at(node + si - sj, a) -
                              at(node - si + sj, a) + at(node - si - sj, a)) /
                             (4.0 * hi * hj);
        jet.second(a, i, j) = mixed;
        jet.second(a, j, i) = mixed;
      }
    }
  }
  jet.first = Jacobian(first);
  return jet;
}

}  // namespace mss
