#include "rasnet/tensor.hpp"

#include <cmath>

#include "rasnet/error.hpp"

namespace rasnet {

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
void BasicTensor<T>::check_count() const {
  if (shape_.size() > 4) throw UsageError("tensor rank above 4: " + shape_string(shape_));
  if (count(shape_) != data_.size()) {
    throw UsageError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

template <typename T>
void check_finite(const BasicTensor<T>& t, const char* where) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw NumericError(std::string("non-finite value in ") + where + " at element " +
                         std::to_string(i));
    }
  }
}

template <typename T>
void check_shape(const BasicTensor<T>& t, const std::vector<int>& expected, const char* where) {
  if (t.shape() != expected) {
    throw UsageError(std::string(where) + ": expected shape " + shape_string(expected) +
                     ", got " + shape_string(t.shape()));
  }
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void check_finite(const BasicTensor<float>&, const char*);
template void check_finite(const BasicTensor<double>&, const char*);
template void check_shape(const BasicTensor<float>&, const std::vector<int>&, const char*);
template void check_shape(const BasicTensor<double>&, const std::vector<int>&, const char*);

}  // namespace rasnet
