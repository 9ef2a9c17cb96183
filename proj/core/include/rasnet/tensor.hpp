#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace rasnet {

/// Dense row-major tensor of up to four dimensions, [batch, channel, height,
/// width] or [batch, features].
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;
  explicit BasicTensor(std::vector<int> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(count(shape_), fill) {}
  BasicTensor(std::vector<int> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_count();
  }

  const std::vector<int>& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Changes the shape, reusing the existing allocation. Element values are
  /// unspecified afterwards.
  void resize(const std::vector<int>& shape) {
    if (shape_ != shape) shape_ = shape;
    data_.resize(count(shape_));
  }

  /// Reinterprets the shape; the element count must not change.
  void reshape(std::vector<int> shape) {
    shape_ = std::move(shape);
    check_count();
  }

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  static std::size_t count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(std::max(d, 0));
    return n;
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  void check_count() const;

  std::vector<int> shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

std::string shape_string(const std::vector<int>& shape);

/// Throws NumericError naming `where` when any element is NaN or infinite.
template <typename T>
void check_finite(const BasicTensor<T>& t, const char* where);

/// Throws UsageError when `t` does not have exactly the given shape.
template <typename T>
void check_shape(const BasicTensor<T>& t, const std::vector<int>& expected, const char* where);

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace rasnet
