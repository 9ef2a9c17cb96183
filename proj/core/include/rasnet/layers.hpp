#pragma once

// Layer kernels with hand-written backward passes. Each layer caches what its
// backward pass needs from the most recent forward call; parameter gradients
// accumulate until zero_grad().
//
// forward/backward return references to buffers owned by the layer, valid
// until the next call. Layers that need their input for backward keep a
// pointer to it, so the input must outlive the matching backward call.

#include <string>
#include <vector>

#include "rasnet/rng.hpp"
#include "rasnet/tensor.hpp"

namespace rasnet {

enum class Mode { kTrain, kInfer };

template <typename T>
struct Param {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;

  Param() = default;
  Param(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

/// Fan-in scaled uniform init, U(-sqrt(6/fan_in), sqrt(6/fan_in)).
template <typename T>
void kaiming_uniform(BasicTensor<T>& w, int fan_in, Rng& rng);

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel = 3, int stride = 1, int pad = 1);

  /// x: [B, C_in, H, W] -> [B, C_out, H', W'].
  const BasicTensor<T>& forward(const BasicTensor<T>& x);
  /// Returns dL/dx; accumulates weight and bias gradients.
  const BasicTensor<T>& backward(const BasicTensor<T>& dy);

  void init(Rng& rng);
  void zero_grad();

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

  Param<T> weight;  // [C_out, C_in, k, k]
  Param<T> bias;    // [C_out]

 private:
  int out_size(int n) const { return (n + 2 * pad_ - kernel_) / stride_ + 1; }

  int in_ = 0, out_ = 0, kernel_ = 3, stride_ = 1, pad_ = 1;
  const BasicTensor<T>* input_ = nullptr;
  BasicTensor<T> y_, dx_;
  std::vector<T> col_, dcol_, flipped_;
};

/// Per-channel batch normalization over [B, C, H, W] (or [B, C]).
template <typename T>
class BatchNorm {
 public:
  static constexpr double kMomentum = 0.9;
  static constexpr double kEpsilon = 1e-5;

  BatchNorm() = default;
  explicit BatchNorm(int channels);

  /// Train mode needs batch >= 2; it normalizes with batch statistics and
  /// updates running_mean/running_var (unbiased variance).
  const BasicTensor<T>& forward(const BasicTensor<T>& x, Mode mode);
  const BasicTensor<T>& backward(const BasicTensor<T>& dy);

  void zero_grad();
  int channels() const { return channels_; }

  Param<T> gamma;
  Param<T> beta;
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;

 private:
  int channels_ = 0;
  Mode last_mode_ = Mode::kInfer;
  BasicTensor<T> x_hat_, y_, dx_;
  std::vector<T> inv_std_;
};

template <typename T>
class LeakyRelu {
 public:
  static constexpr double kSlope = 0.01;

  const BasicTensor<T>& forward(const BasicTensor<T>& x);
  /// Uses the cached output: with a positive slope it has the input's sign.
  const BasicTensor<T>& backward(const BasicTensor<T>& dy);

  const BasicTensor<T>& output() const { return y_; }

 private:
  BasicTensor<T> y_, dx_;
};

/// Non-overlapping max pooling, window = stride = 2 by default.
template <typename T>
class MaxPool2d {
 public:
  explicit MaxPool2d(int window = 2) : window_(window) {}

  const BasicTensor<T>& forward(const BasicTensor<T>& x);
  /// Routes each output gradient to the argmax position of its window.
  const BasicTensor<T>& backward(const BasicTensor<T>& dy);

  const std::vector<std::size_t>& argmax() const { return argmax_; }

 private:
  int window_ = 2;
  std::vector<int> input_shape_;
  std::vector<std::size_t> argmax_;
  BasicTensor<T> y_, dx_;
};

/// y = x W^T + b, x: [B, in] -> [B, out].
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features);

  const BasicTensor<T>& forward(const BasicTensor<T>& x);
  const BasicTensor<T>& backward(const BasicTensor<T>& dy);

  void init(Rng& rng);
  void zero_grad();

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Param<T> weight;  // [out, in]
  Param<T> bias;    // [out]

 private:
  int in_ = 0, out_ = 0;
  const BasicTensor<T>* input_ = nullptr;
  BasicTensor<T> y_, dx_;
};

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class BatchNorm<float>;
extern template class BatchNorm<double>;
extern template class LeakyRelu<float>;
extern template class LeakyRelu<double>;
extern template class MaxPool2d<float>;
extern template class MaxPool2d<double>;
extern template class Linear<float>;
extern template class Linear<double>;

}  // namespace rasnet
