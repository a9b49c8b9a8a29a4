#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pcsim {

using Shape3 = std::array<std::size_t, 3>;

/// Dense row-major 3D array; the last index is contiguous. 2D data uses a
/// trailing extent of 1.
template <class T>
class Array3 {
 public:
  Array3() = default;
  explicit Array3(Shape3 shape, T fill = T{})
      : shape_(shape), data_(shape[0] * shape[1] * shape[2], fill) {}

  const Shape3& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }

  std::size_t stride(int axis) const noexcept {
    switch (axis) {
      case 0: return shape_[1] * shape_[2];
      case 1: return shape_[2];
      default: return 1;
    }
  }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return (i * shape_[1] + j) * shape_[2] + k;
  }

  T& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept { return data_[index(i, j, k)]; }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data_[index(i, j, k)];
  }

  T& at(std::size_t i, std::size_t j, std::size_t k) {
    if (i >= shape_[0] || j >= shape_[1] || k >= shape_[2]) throw std::out_of_range("Array3 index");
    return (*this)(i, j, k);
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    if (i >= shape_[0] || j >= shape_[1] || k >= shape_[2]) throw std::out_of_range("Array3 index");
    return (*this)(i, j, k);
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  Shape3 shape_{0, 0, 0};
  std::vector<T> data_;
};

}  // namespace pcsim
