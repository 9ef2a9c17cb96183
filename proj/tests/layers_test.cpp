#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rasnet/error.hpp"
#include "rasnet/layers.hpp"

namespace rasnet {
namespace {

using test::dot;
using test::max_rel_error;
using test::random_tensor;

constexpr double kGradTolerance = 1e-3;
const std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

// --- conv -----------------------------------------------------------------

TEST(Conv2d, CenteredDeltaKernelIsIdentity) {
  Conv2d<float> conv(1, 1);
  conv.weight.value.fill(0.0f);
  conv.weight.value[4] = 1.0f;
  conv.bias.value.fill(0.0f);
  const Tensor one({1, 1, 1, 1}, std::vector<float>{3.5f});
  EXPECT_EQ(conv.forward(one), one);

  Rng rng(1);
  Tensor x({2, 1, 7, 5});
  for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-2, 2));
  EXPECT_EQ(conv.forward(x), x);
}

TEST(Conv2d, ConstantInputAllOnesKernel) {
  Conv2d<float> conv(1, 1);
  conv.weight.value.fill(1.0f);
  conv.bias.value.fill(0.0f);
  const Tensor& y = conv.forward(Tensor({1, 1, 6, 6}, 7.0f));
  for (int r = 1; r < 5; ++r) {
    for (int c = 1; c < 5; ++c) EXPECT_FLOAT_EQ(y[r * 6 + c], 63.0f);
  }
  EXPECT_FLOAT_EQ(y[0], 28.0f);   // corner: 4 taps
  EXPECT_FLOAT_EQ(y[1], 42.0f);   // edge: 6 taps
}

TEST(Conv2d, MatchesDirectSum) {
  Rng rng(9);
  Conv2d<double> conv(3, 4, 3, 2, 1);
  conv.init(rng);
  for (auto& b : conv.bias.value.values()) b = rng.uniform(-1, 1);
  const auto x = random_tensor({2, 3, 9, 8}, rng);
  const auto& y = conv.forward(x);
  ASSERT_EQ(y.shape(), (std::vector<int>{2, 4, 5, 4}));
  for (int n = 0; n < 2; ++n) {
    for (int o = 0; o < 4; ++o) {
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 4; ++j) {
          double s = conv.bias.value[o];
          for (int c = 0; c < 3; ++c) {
            for (int ki = 0; ki < 3; ++ki) {
              for (int kj = 0; kj < 3; ++kj) {
                const int r = i * 2 - 1 + ki, q = j * 2 - 1 + kj;
                if (r < 0 || r >= 9 || q < 0 || q >= 8) continue;
                s += conv.weight.value[((o * 3 + c) * 3 + ki) * 3 + kj] *
                     x[((n * 3 + c) * 9 + r) * 8 + q];
              }
            }
          }
          ASSERT_NEAR(y[((n * 4 + o) * 5 + i) * 4 + j], s, 1e-12);
        }
      }
    }
  }
}

void check_conv_gradients(int in, int out, int stride, int h, int w) {
  for (auto seed : kSeeds) {
    Rng rng(seed);
    Conv2d<double> conv(in, out, 3, stride, 1);
    conv.init(rng);
    for (auto& b : conv.bias.value.values()) b = rng.uniform(-1, 1);
    auto x = random_tensor({2, in, h, w}, rng);
    const auto& y0 = conv.forward(x);
    const auto wts = random_tensor(y0.shape(), rng);
    conv.zero_grad();
    const auto dx = conv.backward(wts);
    const auto loss = [&] { return dot(conv.forward(x), wts); };

    EXPECT_LT(max_rel_error(x, dx, loss, rng), kGradTolerance) << "input, seed " << seed;
    EXPECT_LT(max_rel_error(conv.weight.value, conv.weight.grad, loss, rng), kGradTolerance)
        << "weight, seed " << seed;
    EXPECT_LT(max_rel_error(conv.bias.value, conv.bias.grad, loss, rng), kGradTolerance)
        << "bias, seed " << seed;
  }
}

TEST(Conv2dGradient, FewInputChannels) { check_conv_gradients(2, 3, 1, 6, 5); }
TEST(Conv2dGradient, ManyInputChannels) { check_conv_gradients(9, 4, 1, 5, 6); }
TEST(Conv2dGradient, Strided) { check_conv_gradients(3, 2, 2, 7, 6); }

TEST(Conv2d, RejectsChannelMismatchAndEarlyBackward) {
  Conv2d<float> conv(2, 3);
  EXPECT_THROW(conv.backward(Tensor({1, 3, 4, 4})), UsageError);
  EXPECT_THROW(conv.forward(Tensor({1, 1, 4, 4})), UsageError);
}

TEST(Conv2d, KaimingInitIsBoundedAndBiasZero) {
  Rng rng(4);
  Conv2d<float> conv(8, 16);
  conv.init(rng);
  const double bound = std::sqrt(6.0 / (8 * 9));
  double sum_sq = 0.0;
  for (float v : conv.weight.value.values()) {
    ASSERT_LE(std::abs(v), bound);
    sum_sq += v * v;
  }
  EXPECT_NEAR(sum_sq / conv.weight.value.size(), bound * bound / 3.0, 0.1 * bound * bound / 3.0);
  for (float b : conv.bias.value.values()) EXPECT_EQ(b, 0.0f);
}

// --- batch norm -------------------------------------------------------------

TEST(BatchNorm, TrainModeStandardizesEachChannel) {
  Rng rng(3);
  BatchNorm<double> bn(3);
  auto x = random_tensor({4, 3, 5, 5}, rng, -3.0, 7.0);
  const auto& y = bn.forward(x, Mode::kTrain);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0, s2 = 0.0;
    int m = 0;
    for (int n = 0; n < 4; ++n) {
      for (int k = 0; k < 25; ++k) {
        const double v = y[(n * 3 + c) * 25 + k];
        s += v;
        s2 += v * v;
        ++m;
      }
    }
    EXPECT_NEAR(s / m, 0.0, 1e-4);
    EXPECT_NEAR(s2 / m - (s / m) * (s / m), 1.0, 1e-4);
  }
}

TEST(BatchNorm, InferModeWithUnitStatsIsIdentity) {
  Rng rng(3);
  BatchNorm<double> bn(2);
  const auto x = random_tensor({3, 2, 4, 4}, rng);
  const auto& y = bn.forward(x, Mode::kInfer);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-5 * std::abs(x[i]) + 1e-12);
}

TEST(BatchNorm, RunningStatsFollowMomentum) {
  BatchNorm<double> bn(1);
  BasicTensor<double> x({2, 1}, std::vector<double>{1.0, 3.0});
  bn.forward(x, Mode::kTrain);
  EXPECT_NEAR(bn.running_mean[0], 0.1 * 2.0, 1e-12);
  EXPECT_NEAR(bn.running_var[0], 0.9 + 0.1 * 2.0, 1e-12);  // unbiased variance of {1,3}
}

TEST(BatchNorm, BatchOfOneRejectedInTrainMode) {
  BatchNorm<float> bn(2);
  EXPECT_THROW(bn.forward(Tensor({1, 2, 3, 3}), Mode::kTrain), UsageError);
  EXPECT_NO_THROW(bn.forward(Tensor({1, 2, 3, 3}), Mode::kInfer));
}

void check_bn_gradients(Mode mode, std::vector<int> shape) {
  for (auto seed : kSeeds) {
    Rng rng(seed);
    const int c = shape[1];
    BatchNorm<double> bn(c);
    for (auto& g : bn.gamma.value.values()) g = rng.uniform(0.5, 2.0);
    for (auto& b : bn.beta.value.values()) b = rng.uniform(-1, 1);
    for (auto& m : bn.running_mean.values()) m = rng.uniform(-1, 1);
    for (auto& v : bn.running_var.values()) v = rng.uniform(0.5, 2.0);
    auto x = random_tensor(shape, rng, -2.0, 3.0);
    const auto wts = random_tensor(shape, rng);
    bn.forward(x, mode);
    bn.zero_grad();
    const auto dx = bn.backward(wts);
    const auto loss = [&] { return dot(bn.forward(x, mode), wts); };
    EXPECT_LT(max_rel_error(x, dx, loss, rng), kGradTolerance) << "input, seed " << seed;
    EXPECT_LT(max_rel_error(bn.gamma.value, bn.gamma.grad, loss, rng), kGradTolerance);
    EXPECT_LT(max_rel_error(bn.beta.value, bn.beta.grad, loss, rng), kGradTolerance);
  }
}

TEST(BatchNormGradient, TrainMode4d) { check_bn_gradients(Mode::kTrain, {3, 2, 4, 3}); }
TEST(BatchNormGradient, TrainMode2d) { check_bn_gradients(Mode::kTrain, {5, 4}); }
TEST(BatchNormGradient, InferMode) { check_bn_gradients(Mode::kInfer, {2, 3, 3, 3}); }

// --- leaky relu ---------------------------------------------------------------

TEST(LeakyRelu, HandValues) {
  LeakyRelu<double> act;
  const auto& y = act.forward(BasicTensor<double>({2}, std::vector<double>{5.0, -2.0}));
  EXPECT_EQ(y[0], 5.0);
  EXPECT_DOUBLE_EQ(y[1], -0.02);
}

TEST(LeakyReluGradient, AwayFromKink) {
  for (auto seed : kSeeds) {
    Rng rng(seed);
    LeakyRelu<double> act;
    auto x = random_tensor({3, 4, 5}, rng, -2.0, 2.0);
    for (auto& v : x.values()) {
      if (std::abs(v) < 0.05) v += v < 0 ? -0.05 : 0.05;
    }
    const auto wts = random_tensor(x.shape(), rng);
    act.forward(x);
    const auto dx = act.backward(wts);
    const auto loss = [&] { return dot(act.forward(x), wts); };
    EXPECT_LT(max_rel_error(x, dx, loss, rng, 60), 1e-6);
  }
}

// --- max pool -------------------------------------------------------------------

TEST(MaxPool2d, HandValues) {
  MaxPool2d<float> pool;
  EXPECT_EQ(pool.forward(Tensor({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4}))[0], 4.0f);
  const auto& y = pool.forward(Tensor({2, 3, 4, 6}, 1.5f));
  EXPECT_EQ(y.shape(), (std::vector<int>{2, 3, 2, 3}));
  for (float v : y.values()) EXPECT_EQ(v, 1.5f);
}

TEST(MaxPool2d, BackwardRoutesToArgmaxAndConservesMass) {
  Rng rng(12);
  MaxPool2d<double> pool;
  const auto x = random_tensor({2, 2, 4, 4}, rng);
  pool.forward(x);
  const auto dy = random_tensor({2, 2, 2, 2}, rng);
  const auto& dx = pool.backward(dy);
  double in_sum = 0.0, out_sum = 0.0;
  std::size_t nonzero = 0;
  for (double v : dx.values()) {
    in_sum += v;
    nonzero += v != 0.0;
  }
  for (double v : dy.values()) out_sum += v;
  EXPECT_NEAR(in_sum, out_sum, 1e-12);
  EXPECT_EQ(nonzero, dy.size());
  for (std::size_t k = 0; k < dy.size(); ++k) EXPECT_EQ(dx[pool.argmax()[k]], dy[k]);
}

TEST(MaxPoolGradient, SeparatedValues) {
  for (auto seed : kSeeds) {
    Rng rng(seed);
    MaxPool2d<double> pool;
    // A shuffled ramp keeps every pair of entries at least 0.01 apart.
    BasicTensor<double> x({2, 3, 4, 6});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * static_cast<double>(i);
    rng.shuffle(x.values().begin(), x.values().end());
    const auto wts = random_tensor({2, 3, 2, 3}, rng);
    pool.forward(x);
    const auto dx = pool.backward(wts);
    const auto loss = [&] { return dot(pool.forward(x), wts); };
    EXPECT_LT(max_rel_error(x, dx, loss, rng, 144), kGradTolerance);
  }
}

// --- linear ----------------------------------------------------------------------

TEST(Linear, HandValues) {
  Linear<double> fc(2, 2);
  fc.weight.value = BasicTensor<double>({2, 2}, std::vector<double>{1, 1, 0, 1});
  fc.bias.value.fill(0.0);
  const auto& y = fc.forward(BasicTensor<double>({1, 2}, std::vector<double>{1, 2}));
  EXPECT_EQ(y[0], 3.0);
  EXPECT_EQ(y[1], 2.0);

  fc.weight.value = BasicTensor<double>({2, 2}, std::vector<double>{1, 0, 0, 1});
  const BasicTensor<double> x({2, 2}, std::vector<double>{-4, 0.5, 9, 1e3});
  EXPECT_EQ(fc.forward(x), x);
}

TEST(LinearGradient, RandomPoints) {
  for (auto seed : kSeeds) {
    Rng rng(seed);
    Linear<double> fc(7, 5);
    fc.init(rng);
    for (auto& b : fc.bias.value.values()) b = rng.uniform(-1, 1);
    auto x = random_tensor({3, 7}, rng);
    const auto wts = random_tensor({3, 5}, rng);
    fc.forward(x);
    fc.zero_grad();
    const auto dx = fc.backward(wts);
    const auto loss = [&] { return dot(fc.forward(x), wts); };
    EXPECT_LT(max_rel_error(x, dx, loss, rng), kGradTolerance);
    EXPECT_LT(max_rel_error(fc.weight.value, fc.weight.grad, loss, rng), kGradTolerance);
    EXPECT_LT(max_rel_error(fc.bias.value, fc.bias.grad, loss, rng), kGradTolerance);
  }
}

TEST(Linear, GradientsAccumulateUntilZeroed) {
  Rng rng(2);
  Linear<double> fc(3, 2);
  fc.init(rng);
  const auto x = random_tensor({2, 3}, rng);
  const auto dy = random_tensor({2, 2}, rng);
  fc.zero_grad();
  fc.forward(x);
  fc.backward(dy);
  const auto once = fc.weight.grad;
  fc.backward(dy);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(fc.weight.grad[i], 2 * once[i], 1e-12);
  fc.zero_grad();
  for (double g : fc.weight.grad.values()) EXPECT_EQ(g, 0.0);
}

// --- tensor ------------------------------------------------------------------------

TEST(Tensor, ShapeContracts) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<float>(5)), UsageError);
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  t.reshape({6, 4});
  EXPECT_EQ(t.dim(0), 6);
  EXPECT_THROW(t.reshape({5, 5}), UsageError);
  t[3] = std::nanf("");
  EXPECT_THROW(check_finite(t, "test"), NumericError);
}

}  // namespace
}  // namespace rasnet
