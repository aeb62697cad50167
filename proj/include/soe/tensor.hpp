#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "soe/error.hpp"

namespace soe {

inline size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative tensor extent");
    n *= static_cast<size_t>(d);
  }
  return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major N-d array. T is float in normal use; double instantiations
// back the finite-difference shadow checks.
template <typename T>
class BasicTensor {
public:
  BasicTensor() = default;
  explicit BasicTensor(std::vector<int> shape)
      : shape_(std::move(shape)), data_(shape_numel(shape_), T(0)) {}
  BasicTensor(std::vector<int> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_))
      throw ShapeError("tensor data length does not match shape " + shape_str(shape_));
  }

  static BasicTensor zeros(std::vector<int> shape) { return BasicTensor(std::move(shape)); }
  static BasicTensor full(std::vector<int> shape, T v) {
    BasicTensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }
  static BasicTensor scalar(T v) {
    BasicTensor t{std::vector<int>{}};
    t.data_[0] = v;
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty() && shape_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  T operator[](size_t i) const { return data_[i]; }

  T item() const {
    if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape_));
    return data_[0];
  }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool same_shape(const BasicTensor& o) const { return shape_ == o.shape_; }

private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

} // namespace soe
