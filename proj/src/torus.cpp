#include "lace/torus.hpp"

#include <string>

namespace lace {

TorusGeometry::TorusGeometry(int dim, int side) : dim_(dim), side_(side) {
  if (dim < 1) fail(ErrorCode::InvalidArgument, "torus dimension must be >= 1");
  if (side < 2 || side % 2 != 0)
    fail(ErrorCode::InvalidArgument, "torus side must be an even integer >= 2, got " + std::to_string(side));
  volume_ = 1;
  for (int a = 0; a < dim; ++a) volume_ *= side;
}

Index TorusGeometry::index(const Site& x) const {
  if (x.size() != dim_) fail(ErrorCode::InvalidArgument, "site dimension mismatch");
  Index i = 0;
  Index stride = 1;
  for (int a = 0; a < dim_; ++a) {
    int c = x(a) % side_;
    if (c < 0) c += side_;
    i += stride * c;
    stride *= side_;
  }
  return i;
}

Site TorusGeometry::coordinates(Index i) const {
  Site x(dim_);
  for (int a = 0; a < dim_; ++a) {
    int c = static_cast<int>(i % side_);
    i /= side_;
    x(a) = c > side_ / 2 ? c - side_ : c;
  }
  return x;
}

Index TorusGeometry::add(Index a, Index b) const noexcept {
  Index r = 0;
  Index stride = 1;
  for (int k = 0; k < dim_; ++k) {
    Index c = (a % side_) + (b % side_);
    if (c >= side_) c -= side_;
    r += c * stride;
    stride *= side_;
    a /= side_;
    b /= side_;
  }
  return r;
}

Index TorusGeometry::subtract(Index a, Index b) const noexcept {
  Index r = 0;
  Index stride = 1;
  for (int k = 0; k < dim_; ++k) {
    Index c = (a % side_) - (b % side_);
    if (c < 0) c += side_;
    r += c * stride;
    stride *= side_;
    a /= side_;
    b /= side_;
  }
  return r;
}

}  // namespace lace
