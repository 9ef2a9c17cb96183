#include "rasnet/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rasnet/error.hpp"

namespace rasnet {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using Array = Eigen::Array<T, Eigen::Dynamic, 1>;

// Same summation order for every call, whatever the operand addresses.
// Eigen's reductions peel to an aligned address and a blocked GEMM rounds a
// row differently depending on its batch position; either would make results
// depend on heap layout.
template <typename T, typename Term>
T fixed_order_sum(Eigen::Index n, Term term) {
  constexpr int kLanes = 16;
  T acc[kLanes] = {};
  Eigen::Index i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int k = 0; k < kLanes; ++k) acc[k] += term(i + k);
  }
  T tail = 0;
  for (; i < n; ++i) tail += term(i);
  for (int width = kLanes / 2; width > 0; width /= 2) {
    for (int k = 0; k < width; ++k) acc[k] += acc[k + width];
  }
  return acc[0] + tail;
}

template <typename T>
T fixed_order_dot(const T* a, const T* b, Eigen::Index n) {
  return fixed_order_sum<T>(n, [&](Eigen::Index i) { return a[i] * b[i]; });
}

void require_rank4(const std::vector<int>& shape, const char* where) {
  if (shape.size() != 4) {
    throw UsageError(std::string(where) + ": expected a [B, C, H, W] tensor, got " +
                     shape_string(shape));
  }
}

// Unfolds output rows [y0, y1) of one sample [C, H, W] into columns
// [C*k*k, (y1-y0)*OW].
template <typename T>
void im2col(const T* x, int channels, int h, int w, int k, int stride, int pad, int ow, int y0,
            int y1, T* col) {
  const std::size_t len = static_cast<std::size_t>(y1 - y0) * ow;
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = col + (static_cast<std::size_t>(c) * k * k + ki * k + kj) * len;
        // Output columns whose input column lies inside the image.
        const int lo = std::clamp((pad - kj + stride - 1) / stride, 0, ow);
        const int hi = std::clamp((w + pad - kj + stride - 1) / stride, lo, ow);
        for (int y = y0; y < y1; ++y) {
          const int iy = y * stride - pad + ki;
          T* out = row + static_cast<std::size_t>(y - y0) * ow;
          if (iy < 0 || iy >= h) {
            std::fill(out, out + ow, T(0));
            continue;
          }
          const T* in = x + (static_cast<std::size_t>(c) * h + iy) * w;
          std::fill(out, out + lo, T(0));
          if (stride == 1) {
            std::copy(in + lo - pad + kj, in + hi - pad + kj, out + lo);
          } else {
            for (int xo = lo; xo < hi; ++xo) out[xo] = in[xo * stride - pad + kj];
          }
          std::fill(out + hi, out + ow, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int channels, int h, int w, int k, int stride, int pad, int ow, int y0,
            int y1, T* x) {
  const std::size_t len = static_cast<std::size_t>(y1 - y0) * ow;
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = col + (static_cast<std::size_t>(c) * k * k + ki * k + kj) * len;
        const int lo = std::clamp((pad - kj + stride - 1) / stride, 0, ow);
        const int hi = std::clamp((w + pad - kj + stride - 1) / stride, lo, ow);
        for (int y = y0; y < y1; ++y) {
          const int iy = y * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          const T* in = row + static_cast<std::size_t>(y - y0) * ow;
          T* out = x + (static_cast<std::size_t>(c) * h + iy) * w;
          for (int xo = lo; xo < hi; ++xo) out[xo * stride - pad + kj] += in[xo];
        }
      }
    }
  }
}

// Output rows per im2col tile, keeping a tile around 256 KiB of floats.
int tile_rows(int kdim, int oh, int ow) {
  constexpr int kTileElems = 64 * 1024;
  return std::clamp(kTileElems / std::max(1, kdim * ow), 1, oh);
}

}  // namespace

template <typename T>
void kaiming_uniform(BasicTensor<T>& w, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<T>(rng.uniform(-bound, bound));
  }
}

// --- Conv2d -----------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad)
    : weight("weight", {out_channels, in_channels, kernel, kernel}),
      bias("bias", {out_channels}),
      in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || stride <= 0 || pad < 0) {
    throw UsageError("invalid convolution geometry");
  }
}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  kaiming_uniform(weight.value, in_ * kernel_ * kernel_, rng);
  bias.value.fill(T(0));
}

template <typename T>
void Conv2d<T>::zero_grad() {
  weight.grad.fill(T(0));
  bias.grad.fill(T(0));
}

template <typename T>
const BasicTensor<T>& Conv2d<T>::forward(const BasicTensor<T>& x) {
  require_rank4(x.shape(), "conv2d");
  if (x.dim(1) != in_) {
    throw UsageError("conv2d: expected " + std::to_string(in_) + " input channels, got " +
                     std::to_string(x.dim(1)));
  }
  const int b = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int oh = out_size(h), ow = out_size(w);
  if (oh <= 0 || ow <= 0) throw UsageError("conv2d: input smaller than kernel");
  input_ = &x;

  const int kdim = in_ * kernel_ * kernel_;
  const int pix = oh * ow;
  const int rows = tile_rows(kdim, oh, ow);
  col_.resize(static_cast<std::size_t>(kdim) * rows * ow);
  y_.resize({b, out_, oh, ow});
  ConstMatMap<T> wmat(weight.value.data(), out_, kdim);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bv(bias.value.data(), out_);
  for (int n = 0; n < b; ++n) {
    const T* xn = x.data() + static_cast<std::size_t>(n) * in_ * h * w;
    T* yn = y_.data() + static_cast<std::size_t>(n) * out_ * pix;
    for (int y0 = 0; y0 < oh; y0 += rows) {
      const int y1 = std::min(oh, y0 + rows);
      const int len = (y1 - y0) * ow;
      im2col(xn, in_, h, w, kernel_, stride_, pad_, ow, y0, y1, col_.data());
      ConstMatMap<T> col(col_.data(), kdim, len);
      StridedMap<T> ymat(yn + y0 * ow, out_, len, Eigen::OuterStride<>(pix));
      ymat.noalias() = wmat * col;
      ymat.colwise() += bv;
    }
  }
  return y_;
}

template <typename T>
const BasicTensor<T>& Conv2d<T>::backward(const BasicTensor<T>& dy) {
  if (!input_) throw UsageError("conv2d backward called before forward");
  const BasicTensor<T>& x = *input_;
  const int b = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int oh = out_size(h), ow = out_size(w);
  check_shape(dy, {b, out_, oh, ow}, "conv2d backward");

  const int kdim = in_ * kernel_ * kernel_;
  const int pix = oh * ow;
  const int rows = tile_rows(kdim, oh, ow);
  col_.resize(static_cast<std::size_t>(kdim) * rows * ow);
  MatMap<T> dwmat(weight.grad.data(), out_, kdim);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dbv(bias.grad.data(), out_);
  for (int n = 0; n < b; ++n) {
    const T* xn = x.data() + static_cast<std::size_t>(n) * in_ * h * w;
    const T* dyn = dy.data() + static_cast<std::size_t>(n) * out_ * pix;
    for (int y0 = 0; y0 < oh; y0 += rows) {
      const int y1 = std::min(oh, y0 + rows);
      const int len = (y1 - y0) * ow;
      ConstStridedMap<T> dymat(dyn + y0 * ow, out_, len, Eigen::OuterStride<>(pix));
      im2col(xn, in_, h, w, kernel_, stride_, pad_, ow, y0, y1, col_.data());
      ConstMatMap<T> col(col_.data(), kdim, len);
      dwmat.noalias() += dymat * col.transpose();
      for (int o = 0; o < out_; ++o) {
        const T* row = dyn + static_cast<std::size_t>(o) * pix + y0 * ow;
        dbv[o] += fixed_order_sum<T>(len, [&](Eigen::Index i) { return row[i]; });
      }
    }
  }

  dx_.resize(x.shape());
  ConstMatMap<T> wmat(weight.value.data(), out_, kdim);
  const int back_pad = kernel_ - 1 - pad_;
  if (stride_ == 1 && in_ >= 8 && back_pad >= 0 && oh + 2 * back_pad - kernel_ + 1 == h) {
    // dx is dy correlated with the spatially flipped, channel-transposed
    // kernel, which keeps the GEMM in the forward layout. With very few input
    // channels that GEMM degenerates to a GEMV, so col2im is used instead.
    const int kk = kernel_ * kernel_;
    const int tdim = out_ * kk;
    flipped_.resize(static_cast<std::size_t>(in_) * tdim);
    for (int o = 0; o < out_; ++o) {
      for (int c = 0; c < in_; ++c) {
        for (int k = 0; k < kk; ++k) {
          flipped_[(static_cast<std::size_t>(c) * out_ + o) * kk + (kk - 1 - k)] =
              weight.value[(static_cast<std::size_t>(o) * in_ + c) * kk + k];
        }
      }
    }
    ConstMatMap<T> fmat(flipped_.data(), in_, tdim);
    const int trows = tile_rows(tdim, h, w);
    dcol_.resize(static_cast<std::size_t>(tdim) * trows * w);
    for (int n = 0; n < b; ++n) {
      const T* dyn = dy.data() + static_cast<std::size_t>(n) * out_ * pix;
      T* dxn = dx_.data() + static_cast<std::size_t>(n) * in_ * h * w;
      for (int y0 = 0; y0 < h; y0 += trows) {
        const int y1 = std::min(h, y0 + trows);
        const int len = (y1 - y0) * w;
        im2col(dyn, out_, oh, ow, kernel_, 1, back_pad, w, y0, y1, dcol_.data());
        ConstMatMap<T> col(dcol_.data(), tdim, len);
        StridedMap<T> dxmat(dxn + y0 * w, in_, len, Eigen::OuterStride<>(h * w));
        dxmat.noalias() = fmat * col;
      }
    }
    return dx_;
  }

  dx_.fill(T(0));
  dcol_.resize(col_.size());
  for (int n = 0; n < b; ++n) {
    const std::size_t in_off = static_cast<std::size_t>(n) * in_ * h * w;
    const T* dyn = dy.data() + static_cast<std::size_t>(n) * out_ * pix;
    for (int y0 = 0; y0 < oh; y0 += rows) {
      const int y1 = std::min(oh, y0 + rows);
      const int len = (y1 - y0) * ow;
      ConstStridedMap<T> dymat(dyn + y0 * ow, out_, len, Eigen::OuterStride<>(pix));
      MatMap<T> dcol(dcol_.data(), kdim, len);
      dcol.noalias() = wmat.transpose() * dymat;
      col2im(dcol_.data(), in_, h, w, kernel_, stride_, pad_, ow, y0, y1, dx_.data() + in_off);
    }
  }
  return dx_;
}

// --- BatchNorm --------------------------------------------------------------

template <typename T>
BatchNorm<T>::BatchNorm(int channels)
    : gamma("gamma", {channels}),
      beta("beta", {channels}),
      running_mean({channels}, T(0)),
      running_var({channels}, T(1)),
      channels_(channels) {
  gamma.value.fill(T(1));
}

template <typename T>
void BatchNorm<T>::zero_grad() {
  gamma.grad.fill(T(0));
  beta.grad.fill(T(0));
}

template <typename T>
const BasicTensor<T>& BatchNorm<T>::forward(const BasicTensor<T>& x, Mode mode) {
  if ((x.rank() != 4 && x.rank() != 2) || x.dim(1) != channels_) {
    throw UsageError("batchnorm: expected [B, " + std::to_string(channels_) +
                     ", ...] input, got " + shape_string(x.shape()));
  }
  const int b = x.dim(0);
  if (mode == Mode::kTrain && b < 2) {
    throw UsageError("batchnorm: train mode needs a batch of at least 2");
  }
  const Eigen::Index inner = x.rank() == 4 ? Eigen::Index{x.dim(2)} * x.dim(3) : 1;
  const double m = static_cast<double>(b) * static_cast<double>(inner);
  last_mode_ = mode;
  x_hat_.resize(x.shape());
  y_.resize(x.shape());
  inv_std_.assign(static_cast<std::size_t>(channels_), T(0));
  const auto seg = [&](const BasicTensor<T>& t, int n, int c) {
    return Eigen::Map<const Array<T>>(t.data() + (Eigen::Index{n} * channels_ + c) * inner, inner);
  };
  const auto mseg = [&](BasicTensor<T>& t, int n, int c) {
    return Eigen::Map<Array<T>>(t.data() + (Eigen::Index{n} * channels_ + c) * inner, inner);
  };

  for (int c = 0; c < channels_; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    double mean = 0.0, var = 0.0;
    if (mode == Mode::kTrain) {
      // Per-plane sums in T, accumulated across the batch in double.
      for (int n = 0; n < b; ++n) {
        const T* p = seg(x, n, c).data();
        mean += fixed_order_sum<T>(inner, [&](Eigen::Index i) { return p[i]; });
      }
      mean /= m;
      const T mu = static_cast<T>(mean);
      for (int n = 0; n < b; ++n) {
        const T* p = seg(x, n, c).data();
        var += fixed_order_sum<T>(inner, [&](Eigen::Index i) { return (p[i] - mu) * (p[i] - mu); });
      }
      var /= m;
      const double unbiased = var * m / (m - 1.0);
      running_mean[cu] = static_cast<T>(kMomentum * running_mean[cu] + (1.0 - kMomentum) * mean);
      running_var[cu] = static_cast<T>(kMomentum * running_var[cu] + (1.0 - kMomentum) * unbiased);
    } else {
      mean = running_mean[cu];
      var = running_var[cu];
    }
    const double inv_std = 1.0 / std::sqrt(var + kEpsilon);
    inv_std_[cu] = static_cast<T>(inv_std);
    const T g = gamma.value[cu], bt = beta.value[cu];
    const T mu = static_cast<T>(mean), is = static_cast<T>(inv_std);
    for (int n = 0; n < b; ++n) {
      auto xh = mseg(x_hat_, n, c);
      xh = (seg(x, n, c) - mu) * is;
      mseg(y_, n, c) = g * xh + bt;
    }
  }
  return y_;
}

template <typename T>
const BasicTensor<T>& BatchNorm<T>::backward(const BasicTensor<T>& dy) {
  check_shape(dy, x_hat_.shape(), "batchnorm backward");
  const int b = dy.dim(0);
  const Eigen::Index inner = dy.rank() == 4 ? Eigen::Index{dy.dim(2)} * dy.dim(3) : 1;
  const double m = static_cast<double>(b) * static_cast<double>(inner);
  dx_.resize(dy.shape());
  const auto seg = [&](const BasicTensor<T>& t, int n, int c) {
    return Eigen::Map<const Array<T>>(t.data() + (Eigen::Index{n} * channels_ + c) * inner, inner);
  };
  for (int c = 0; c < channels_; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int n = 0; n < b; ++n) {
      const T* d = seg(dy, n, c).data();
      const T* xh = seg(x_hat_, n, c).data();
      sum_dy += fixed_order_sum<T>(inner, [&](Eigen::Index i) { return d[i]; });
      sum_dy_xh += fixed_order_dot(d, xh, inner);
    }
    gamma.grad[cu] += static_cast<T>(sum_dy_xh);
    beta.grad[cu] += static_cast<T>(sum_dy);
    const double k = static_cast<double>(gamma.value[cu]) * inv_std_[cu];
    // Train mode: dx = k * (dy - mean(dy) - x_hat * mean(dy * x_hat)).
    const bool train = last_mode_ == Mode::kTrain;
    const T scale = static_cast<T>(k);
    const T shift = train ? static_cast<T>(k * sum_dy / m) : T(0);
    const T slope = train ? static_cast<T>(k * sum_dy_xh / m) : T(0);
    for (int n = 0; n < b; ++n) {
      Eigen::Map<Array<T>>(dx_.data() + (Eigen::Index{n} * channels_ + c) * inner, inner) =
          scale * seg(dy, n, c) - shift - slope * seg(x_hat_, n, c);
    }
  }
  return dx_;
}

// --- LeakyRelu --------------------------------------------------------------

template <typename T>
const BasicTensor<T>& LeakyRelu<T>::forward(const BasicTensor<T>& x) {
  y_.resize(x.shape());
  const T slope = static_cast<T>(kSlope);
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::Map<const Array<T>> in(x.data(), n);
  // max(x, a*x) equals the leaky ReLU for 0 < a < 1 and stays branch-free.
  Eigen::Map<Array<T>>(y_.data(), n) = in.max(slope * in);
  return y_;
}

template <typename T>
const BasicTensor<T>& LeakyRelu<T>::backward(const BasicTensor<T>& dy) {
  check_shape(dy, y_.shape(), "leaky_relu backward");
  dx_.resize(dy.shape());
  const T slope = static_cast<T>(kSlope);
  const T* __restrict y = y_.data();
  const T* __restrict g = dy.data();
  T* __restrict out = dx_.data();
  const std::size_t n = dy.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] > T(0) ? g[i] : slope * g[i];
  return dx_;
}

// --- MaxPool2d --------------------------------------------------------------

template <typename T>
const BasicTensor<T>& MaxPool2d<T>::forward(const BasicTensor<T>& x) {
  require_rank4(x.shape(), "maxpool2d");
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int oh = h / window_, ow = w / window_;
  if (oh == 0 || ow == 0) throw UsageError("maxpool2d: input smaller than window");
  input_shape_ = x.shape();
  y_.resize({b, c, oh, ow});
  argmax_.resize(y_.size());
  std::size_t o = 0;
  for (int plane = 0; plane < b * c; ++plane) {
    const std::size_t base = static_cast<std::size_t>(plane) * h * w;
    for (int yo = 0; yo < oh; ++yo) {
      for (int xo = 0; xo < ow; ++xo, ++o) {
        std::size_t best = base + static_cast<std::size_t>(yo * window_) * w + xo * window_;
        for (int dy = 0; dy < window_; ++dy) {
          for (int dx = 0; dx < window_; ++dx) {
            const std::size_t idx =
                base + static_cast<std::size_t>(yo * window_ + dy) * w + xo * window_ + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        y_[o] = x[best];
        argmax_[o] = best;
      }
    }
  }
  return y_;
}

template <typename T>
const BasicTensor<T>& MaxPool2d<T>::backward(const BasicTensor<T>& dy) {
  if (dy.size() != argmax_.size()) throw UsageError("maxpool2d backward: shape mismatch");
  dx_.resize(input_shape_);
  dx_.fill(T(0));
  for (std::size_t o = 0; o < dy.size(); ++o) dx_[argmax_[o]] += dy[o];
  return dx_;
}

// --- Linear -----------------------------------------------------------------

template <typename T>
Linear<T>::Linear(int in_features, int out_features)
    : weight("weight", {out_features, in_features}),
      bias("bias", {out_features}),
      in_(in_features),
      out_(out_features) {
  if (in_features <= 0 || out_features <= 0) throw UsageError("invalid linear layer size");
}

template <typename T>
void Linear<T>::init(Rng& rng) {
  kaiming_uniform(weight.value, in_, rng);
  bias.value.fill(T(0));
}

template <typename T>
void Linear<T>::zero_grad() {
  weight.grad.fill(T(0));
  bias.grad.fill(T(0));
}

template <typename T>
const BasicTensor<T>& Linear<T>::forward(const BasicTensor<T>& x) {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw UsageError("linear: expected [B, " + std::to_string(in_) + "] input, got " +
                     shape_string(x.shape()));
  }
  input_ = &x;
  const int b = x.dim(0);
  y_.resize({b, out_});
  for (int j = 0; j < out_; ++j) {
    const T* wj = weight.value.data() + static_cast<std::size_t>(j) * in_;
    for (int n = 0; n < b; ++n) {
      y_.data()[static_cast<std::size_t>(n) * out_ + j] =
          fixed_order_dot(x.data() + static_cast<std::size_t>(n) * in_, wj, in_) + bias.value[j];
    }
  }
  return y_;
}

template <typename T>
const BasicTensor<T>& Linear<T>::backward(const BasicTensor<T>& dy) {
  if (!input_) throw UsageError("linear backward called before forward");
  const int b = input_->dim(0);
  check_shape(dy, {b, out_}, "linear backward");
  ConstMatMap<T> xm(input_->data(), b, in_);
  ConstMatMap<T> dym(dy.data(), b, out_);
  ConstMatMap<T> wm(weight.value.data(), out_, in_);
  MatMap<T> dwm(weight.grad.data(), out_, in_);
  dwm.noalias() += dym.transpose() * xm;
  for (int j = 0; j < out_; ++j) {
    bias.grad[j] += fixed_order_sum<T>(b, [&](Eigen::Index n) { return dy.data()[n * out_ + j]; });
  }
  dx_.resize({b, in_});
  MatMap<T> dxm(dx_.data(), b, in_);
  dxm.noalias() = dym * wm;
  return dx_;
}

template void kaiming_uniform(BasicTensor<float>&, int, Rng&);
template void kaiming_uniform(BasicTensor<double>&, int, Rng&);
template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class LeakyRelu<float>;
template class LeakyRelu<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class Linear<float>;
template class Linear<double>;

}  // namespace rasnet
