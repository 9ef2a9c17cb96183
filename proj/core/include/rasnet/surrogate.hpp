#pragma once

// CNN surrogate: four conv blocks, flatten, concatenate the configuration
// vector, then a three-layer fully connected head.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rasnet/adam.hpp"
#include "rasnet/dataset.hpp"
#include "rasnet/layers.hpp"
#include "rasnet/loss.hpp"
#include "rasnet/physics.hpp"

namespace rasnet {

struct ArchitectureDescriptor {
  int input_resolution = 64;
  std::array<int, 4> conv_channels{16, 32, 64, 128};
  int config_length = kConfigLength;
  std::vector<int> fc_hidden{512, 256};
  int output_length = kSpectrumPoints;

  /// Feature count after the last pool: channels[3] * (resolution / 16)^2.
  int flattened_size() const;
  /// Width of the first fully connected layer's input.
  int fc_input_size() const { return flattened_size() + config_length; }

  /// Throws UsageError unless the resolution is a positive multiple of 16
  /// and every width is positive.
  void validate() const;

  friend bool operator==(const ArchitectureDescriptor&, const ArchitectureDescriptor&) = default;
};

/// conv -> BN -> LeakyReLU, twice, then 2x2 max pool.
template <typename T>
struct ConvBlock {
  Conv2d<T> conv1;
  BatchNorm<T> bn1;
  LeakyRelu<T> act1;
  Conv2d<T> conv2;
  BatchNorm<T> bn2;
  LeakyRelu<T> act2;
  MaxPool2d<T> pool;

  ConvBlock() = default;
  ConvBlock(int in_channels, int out_channels);
};

template <typename T>
class Network {
 public:
  Network() = default;
  Network(const ArchitectureDescriptor& descriptor, std::uint64_t seed);

  const ArchitectureDescriptor& descriptor() const { return descriptor_; }

  /// images [B, 1, R, R], configs [B, config_length] -> [B, output_length].
  BasicTensor<T> forward(const BasicTensor<T>& images, const BasicTensor<T>& configs, Mode mode);

  struct InputGradients {
    BasicTensor<T> images;
    BasicTensor<T> configs;
  };

  /// Backpropagates dLoss/dOutput from the last forward call, accumulating
  /// parameter gradients. The images passed to that forward call must still
  /// be alive.
  InputGradients backward(const BasicTensor<T>& d_output);

  void zero_grad();

  /// Which side of every LeakyReLU kink and which max-pool winner the last
  /// forward call used. Equal patterns mean the network was evaluated on one
  /// smooth piece.
  std::vector<std::uint32_t> activation_pattern() const;

  /// Trainable parameters in serialization order.
  std::vector<Param<T>*> parameters();

  /// Every persisted tensor (parameters and BN running statistics) with its
  /// name, in the documented file order.
  std::vector<std::pair<std::string, BasicTensor<T>*>> state();
  std::vector<std::pair<std::string, const BasicTensor<T>*>> state() const;

  /// Same architecture and values at another precision.
  template <typename U>
  Network<U> cast() const;

 private:
  ArchitectureDescriptor descriptor_;
  std::vector<ConvBlock<T>> blocks_;
  std::vector<Linear<T>> fc_;
  std::vector<LeakyRelu<T>> fc_act_;
  int flat_ = 0;
  BasicTensor<T> joined_, d_flat_;
};

extern template class Network<float>;
extern template class Network<double>;

// --- training ---------------------------------------------------------------

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 32;
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double delta = 3.0;
  std::uint64_t seed = 1;
  bool deterministic = true;

  /// Throws UsageError on non-positive values.
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_huber = 0.0;
  double train_mse = 0.0;
  double train_mae = 0.0;
  double train_cs = 0.0;
  double val_huber = 0.0;
  double val_mse = 0.0;
  double val_mae = 0.0;
  double val_cs = 0.0;
  double seconds = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_mse = 0.0;
};

struct SurrogateModel {
  Network<float> network;
  TrainingHistory history;
  std::optional<TrainConfig> train_config;

  const ArchitectureDescriptor& descriptor() const { return network.descriptor(); }
};

/// Deterministically initialized, untrained model.
SurrogateModel build(const ArchitectureDescriptor& descriptor, std::uint64_t seed);

/// Called after every epoch; return false to stop training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

/// Minibatch Huber/Adam training on the dataset's train split with per-epoch
/// validation. On return the model holds the best-validation-MSE parameters
/// and the full history. Throws NumericError on a non-finite loss.
void train(SurrogateModel& model, const Dataset& dataset, const TrainConfig& config,
           const EpochCallback& on_epoch = {});

/// Batched inference over the given sample indices; rows follow `indices`.
Tensor predict_normalized(SurrogateModel& model, const Dataset& dataset,
                          std::span<const std::uint32_t> indices, int batch_size = 64);

/// Inference-mode metrics over a subset of the dataset.
Metrics evaluate(SurrogateModel& model, const Dataset& dataset,
                 std::span<const std::uint32_t> indices, double delta = 3.0,
                 double* huber_out = nullptr);

struct Prediction {
  Spectrum spectrum;
  std::array<double, kSpectrumPoints> absorption{};
  std::vector<Band> bands;
};

/// Converts one normalized output row to dB, absorption and -10 dB bands.
Prediction interpret(std::span<const float> normalized_row);

/// Single-sample inference from an image and an encoded configuration.
Prediction predict(SurrogateModel& model, const RasterGrid& image, const ConfigVector& config);

// --- persistence --------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

/// Writes model.json and weights.f32 into `directory`.
void save_model(const SurrogateModel& model, const std::filesystem::path& directory);

/// Throws DataError on version, shape, size or CRC32 mismatch, and when
/// `expected` is given and differs from the stored descriptor.
SurrogateModel load_model(const std::filesystem::path& directory,
                          const ArchitectureDescriptor* expected = nullptr);

}  // namespace rasnet
