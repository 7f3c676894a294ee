#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "lace/error.hpp"

namespace lace {

using Site = Eigen::VectorXi;
using Index = Eigen::Index;

/// Periodic box (Z/LZ)^d. Site indices are row-major in the coordinates
/// reduced to [0, L); coordinates handed out are minimal images in (-L/2, L/2].
class TorusGeometry {
 public:
  TorusGeometry() = default;
  TorusGeometry(int dim, int side);

  int dim() const noexcept { return dim_; }
  int side() const noexcept { return side_; }
  Index volume() const noexcept { return volume_; }

  Index index(const Site& x) const;
  Site coordinates(Index i) const;

  /// Minimal-image component along `axis`.
  int component(Index i, int axis) const noexcept {
    Index stride = 1;
    for (int a = 0; a < axis; ++a) stride *= side_;
    int c = static_cast<int>((i / stride) % side_);
    return c > side_ / 2 ? c - side_ : c;
  }

  double norm2(Index i) const noexcept {
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) {
      int c = static_cast<int>(i % side_);
      i /= side_;
      if (c > side_ / 2) c -= side_;
      s += static_cast<double>(c) * c;
    }
    return s;
  }

  Index add(Index a, Index b) const noexcept;
  Index subtract(Index a, Index b) const noexcept;
  Index negate(Index a) const noexcept { return subtract(0, a); }

  bool operator==(const TorusGeometry& o) const noexcept {
    return dim_ == o.dim_ && side_ == o.side_;
  }

 private:
  int dim_ = 0;
  int side_ = 0;
  Index volume_ = 0;
};

/// A scalar field on a torus.
template <typename Scalar>
struct TorusTable {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  TorusGeometry geometry;
  Array values;

  TorusTable() = default;
  explicit TorusTable(const TorusGeometry& g)
      : geometry(g), values(Array::Zero(g.volume())) {}
  TorusTable(const TorusGeometry& g, Array v) : geometry(g), values(std::move(v)) {
    if (values.size() != g.volume())
      fail(ErrorCode::InvalidArgument, "table size does not match torus volume");
  }

  static TorusTable delta(const TorusGeometry& g) {
    TorusTable t(g);
    t.values(0) = Scalar(1);
    return t;
  }

  Scalar& operator[](Index i) { return values(i); }
  const Scalar& operator[](Index i) const { return values(i); }
  Scalar at(const Site& x) const { return values(geometry.index(x)); }
  Scalar sum() const { return values.sum(); }
};

using TorusTabled = TorusTable<double>;

/// Sum_x |x|^2 f(x) with minimal-image norms.
template <typename Scalar>
Scalar second_moment(const TorusTable<Scalar>& f) {
  Scalar s(0);
  for (Index i = 0; i < f.values.size(); ++i)
    s += static_cast<Scalar>(f.geometry.norm2(i)) * f.values(i);
  return s;
}

/// Largest deviation |f(x) - f(-x)|.
template <typename Scalar>
Scalar reflection_asymmetry(const TorusTable<Scalar>& f) {
  Scalar worst(0);
  for (Index i = 0; i < f.values.size(); ++i)
    worst = std::max<Scalar>(worst, std::abs(f.values(i) - f.values(f.geometry.negate(i))));
  return worst;
}

}  // namespace lace
