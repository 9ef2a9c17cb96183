#include "rasnet/loss.hpp"

#include <cmath>
#include <string>

#include "rasnet/error.hpp"

namespace rasnet {

namespace {

template <typename T>
double cosine_impl(const T* a, const T* b, std::size_t n) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw NumericError("cosine similarity of a zero vector is undefined");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

template <typename T>
void check_pair(const BasicTensor<T>& pred, const BasicTensor<T>& target, const char* where) {
  if (pred.shape() != target.shape()) {
    throw UsageError(std::string(where) + ": prediction " + shape_string(pred.shape()) +
                     " and target " + shape_string(target.shape()) + " differ in shape");
  }
  if (pred.empty()) throw UsageError(std::string(where) + ": empty tensors");
}

template <typename T>
std::size_t row_length(const BasicTensor<T>& t) {
  return t.rank() >= 2 ? t.size() / static_cast<std::size_t>(t.dim(0)) : t.size();
}

}  // namespace

double cosine_similarity(const float* a, const float* b, std::size_t n) {
  return cosine_impl(a, b, n);
}
double cosine_similarity(const double* a, const double* b, std::size_t n) {
  return cosine_impl(a, b, n);
}

template <typename T>
LossResult<T> huber_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target, double delta) {
  check_pair(pred, target, "huber_loss");
  if (!(delta > 0.0)) {
    throw UsageError("huber delta must be > 0 (delta = 0 makes the loss identically zero)");
  }
  const double n = static_cast<double>(pred.size());
  LossResult<T> out{0.0, BasicTensor<T>(pred.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    const double ae = std::abs(e);
    if (ae <= delta) {
      sum += 0.5 * e * e;
      out.grad[i] = static_cast<T>(e / n);
    } else {
      sum += delta * ae - 0.5 * delta * delta;
      out.grad[i] = static_cast<T>((e > 0.0 ? delta : -delta) / n);
    }
  }
  out.loss = sum / n;
  if (!std::isfinite(out.loss)) throw NumericError("huber loss is not finite");
  return out;
}

template <typename T>
Metrics compute_metrics(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  MetricAccumulator acc;
  acc.add(pred, target);
  return acc.metrics();
}

template <typename T>
void MetricAccumulator::add(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                            double huber) {
  check_pair(pred, target, "metrics");
  const std::size_t len = row_length(pred);
  const std::size_t rows = pred.size() / len;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    sq_sum_ += e * e;
    abs_sum_ += std::abs(e);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    cs_sum_ += cosine_impl(pred.data() + r * len, target.data() + r * len, len);
  }
  huber_sum_ += huber * static_cast<double>(pred.size());
  elements_ += pred.size();
  rows_ += rows;
}

Metrics MetricAccumulator::metrics() const {
  if (elements_ == 0) return {};
  const double n = static_cast<double>(elements_);
  return {sq_sum_ / n, abs_sum_ / n, cs_sum_ / static_cast<double>(rows_)};
}

template LossResult<float> huber_loss(const BasicTensor<float>&, const BasicTensor<float>&, double);
template LossResult<double> huber_loss(const BasicTensor<double>&, const BasicTensor<double>&,
                                       double);
template Metrics compute_metrics(const BasicTensor<float>&, const BasicTensor<float>&);
template Metrics compute_metrics(const BasicTensor<double>&, const BasicTensor<double>&);
template void MetricAccumulator::add(const BasicTensor<float>&, const BasicTensor<float>&, double);
template void MetricAccumulator::add(const BasicTensor<double>&, const BasicTensor<double>&,
                                     double);

}  // namespace rasnet
