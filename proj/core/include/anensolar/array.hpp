#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace anensolar {

/// The one missing-value sentinel used across every tensor.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// Dense row-major N-d array of doubles with bounds-checked access.
template <std::size_t Rank>
class Array {
 public:
  using Shape = std::array<std::size_t, Rank>;

  Array() { shape_.fill(0); }

  explicit Array(const Shape& shape, double fill = kMissing)
      : shape_(shape), data_(count(shape), fill) {}

  const Shape& shape() const noexcept { return shape_; }
  std::size_t extent(std::size_t dim) const { return shape_.at(dim); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  template <typename... Idx>
  double& operator()(Idx... idx) {
    return data_[offset(static_cast<std::size_t>(idx)...)];
  }
  template <typename... Idx>
  double operator()(Idx... idx) const {
    return data_[offset(static_cast<std::size_t>(idx)...)];
  }

  /// Row-major offset; throws std::out_of_range on any out-of-shape index.
  template <typename... Idx>
  std::size_t offset(Idx... idx) const {
    static_assert(sizeof...(Idx) == Rank, "index count must equal rank");
    const std::array<std::size_t, Rank> ix{static_cast<std::size_t>(idx)...};
    std::size_t off = 0;
    for (std::size_t d = 0; d < Rank; ++d) {
      if (ix[d] >= shape_[d]) {
        throw std::out_of_range("index " + std::to_string(ix[d]) +
                                " out of range for dimension " +
                                std::to_string(d) + " of extent " +
                                std::to_string(shape_[d]));
      }
      off = off * shape_[d] + ix[d];
    }
    return off;
  }

  /// Stride (in elements) of dimension `dim`.
  std::size_t stride(std::size_t dim) const {
    std::size_t s = 1;
    for (std::size_t d = Rank; d-- > dim + 1;) s *= shape_[d];
    return s;
  }

  friend bool operator==(const Array& a, const Array& b) {
    if (a.shape_ != b.shape_) return false;
    for (std::size_t k = 0; k < a.data_.size(); ++k) {
      const double x = a.data_[k], y = b.data_[k];
      if (is_missing(x) != is_missing(y)) return false;
      if (!is_missing(x) && x != y) return false;
    }
    return true;
  }

  static std::size_t count(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace anensolar
