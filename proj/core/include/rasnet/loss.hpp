#pragma once

#include "rasnet/tensor.hpp"

namespace rasnet {

template <typename T>
struct LossResult {
  double loss = 0.0;
  BasicTensor<T> grad;  // dLoss/dPred, same shape as pred
};

/// Mean Huber loss over every element, with e = pred - target:
///   0.5 e^2                    for |e| <= delta
///   delta |e| - 0.5 delta^2    otherwise.
/// Gradient is e/N inside the quadratic zone and delta*sign(e)/N outside.
template <typename T>
LossResult<T> huber_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target, double delta);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  double cosine_similarity = 0.0;
};

/// Element-mean MSE and MAE; cosine similarity computed per row of a
/// [batch, features] tensor and averaged. Throws NumericError on a zero row.
template <typename T>
Metrics compute_metrics(const BasicTensor<T>& pred, const BasicTensor<T>& target);

/// Running sums for metrics accumulated over several batches.
class MetricAccumulator {
 public:
  template <typename T>
  void add(const BasicTensor<T>& pred, const BasicTensor<T>& target, double huber = 0.0);

  Metrics metrics() const;
  double huber() const { return elements_ ? huber_sum_ / static_cast<double>(elements_) : 0.0; }
  std::size_t rows() const { return rows_; }

 private:
  double sq_sum_ = 0.0;
  double abs_sum_ = 0.0;
  double cs_sum_ = 0.0;
  double huber_sum_ = 0.0;
  std::size_t elements_ = 0;
  std::size_t rows_ = 0;
};

double cosine_similarity(const float* a, const float* b, std::size_t n);
double cosine_similarity(const double* a, const double* b, std::size_t n);

}  // namespace rasnet
