#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "rasnet/error.hpp"
#include "rasnet/surrogate.hpp"

namespace rasnet {

namespace {

struct Batch {
  Tensor images;
  Tensor configs;
  Tensor targets;
};

Batch gather(const Dataset& ds, std::span<const std::uint32_t> indices) {
  const int b = static_cast<int>(indices.size());
  const std::size_t img = ds.image_size();
  Batch out{Tensor({b, 1, ds.resolution, ds.resolution}), Tensor({b, kConfigLength}),
            Tensor({b, kSpectrumPoints})};
  for (int n = 0; n < b; ++n) {
    const std::size_t i = indices[static_cast<std::size_t>(n)];
    const auto nu = static_cast<std::size_t>(n);
    std::copy_n(ds.images.data() + i * img, img, out.images.data() + nu * img);
    std::copy_n(ds.configs.data() + i * kConfigLength, kConfigLength,
                out.configs.data() + nu * kConfigLength);
    std::copy_n(ds.targets.data() + i * kSpectrumPoints, kSpectrumPoints,
                out.targets.data() + nu * kSpectrumPoints);
  }
  return out;
}

using Snapshot = std::vector<std::vector<float>>;

Snapshot snapshot(const Network<float>& net) {
  Snapshot s;
  for (const auto& [name, t] : net.state()) s.push_back(t->storage());
  return s;
}

void restore(Network<float>& net, const Snapshot& s) {
  auto state = net.state();
  for (std::size_t i = 0; i < state.size(); ++i) state[i].second->storage() = s[i];
}

void check_compatible(const SurrogateModel& model, const Dataset& ds) {
  if (model.descriptor().input_resolution != ds.resolution) {
    throw UsageError("dataset resolution " + std::to_string(ds.resolution) +
                     " does not match model input resolution " +
                     std::to_string(model.descriptor().input_resolution));
  }
  if (model.descriptor().config_length != kConfigLength ||
      model.descriptor().output_length != kSpectrumPoints) {
    throw UsageError("model head does not match the dataset's config/spectrum layout");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs <= 0 || batch_size <= 0) throw UsageError("epochs and batch size must be positive");
  if (!(learning_rate > 0.0) || !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw UsageError("invalid optimizer hyperparameters");
  }
  if (!(delta > 0.0)) {
    throw UsageError("huber delta must be > 0 (delta = 0 makes the loss identically zero)");
  }
}

void train(SurrogateModel& model, const Dataset& ds, const TrainConfig& config,
           const EpochCallback& on_epoch) {
  config.validate();
  check_compatible(model, ds);
  const auto& train_idx = ds.splits.train;
  const auto& val_idx = ds.splits.val;
  if (train_idx.empty() || val_idx.empty()) {
    throw UsageError("dataset needs non-empty train and validation splits");
  }
  if (static_cast<std::size_t>(config.batch_size) > train_idx.size()) {
    throw UsageError("batch size exceeds the training split");
  }

  auto& net = model.network;
  model.train_config = config;
  model.history = {};
  AdamState adam;
  adam.config = {config.learning_rate, config.beta1, config.beta2, 1e-8};
  auto params = net.parameters();

  Snapshot best;
  std::vector<std::uint32_t> order(train_idx.begin(), train_idx.end());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // Each epoch reshuffles the split from a fresh stream so that the order
    // depends only on (seed, epoch).
    order.assign(train_idx.begin(), train_idx.end());
    Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(epoch), /*domain=*/0x7a1);
    rng.shuffle(order.begin(), order.end());

    MetricAccumulator acc;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min<std::size_t>(config.batch_size, order.size() - start);
      if (len < 2) continue;  // batch norm needs two samples
      const Batch batch = gather(ds, std::span(order).subspan(start, len));
      net.zero_grad();
      try {
        const Tensor out = net.forward(batch.images, batch.configs, Mode::kTrain);
        const auto loss = huber_loss(out, batch.targets, config.delta);
        net.backward(loss.grad);
        adam_step(params, adam);
        acc.add(out, batch.targets, loss.loss);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(start / config.batch_size) + ": " + e.what());
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const Metrics tm = acc.metrics();
    rec.train_huber = acc.huber();
    rec.train_mse = tm.mse;
    rec.train_mae = tm.mae;
    rec.train_cs = tm.cosine_similarity;
    const Metrics vm = evaluate(model, ds, val_idx, config.delta, &rec.val_huber);
    rec.val_mse = vm.mse;
    rec.val_mae = vm.mae;
    rec.val_cs = vm.cosine_similarity;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    model.history.epochs.push_back(rec);

    if (best.empty() || rec.val_mse < model.history.best_val_mse) {
      model.history.best_epoch = epoch;
      model.history.best_val_mse = rec.val_mse;
      best = snapshot(net);
    }
    if (on_epoch && !on_epoch(rec)) break;
  }
  restore(net, best);
}

Tensor predict_normalized(SurrogateModel& model, const Dataset& ds,
                          std::span<const std::uint32_t> indices, int batch_size) {
  check_compatible(model, ds);
  const int out_len = model.descriptor().output_length;
  Tensor out({static_cast<int>(indices.size()), out_len});
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t len = std::min<std::size_t>(batch_size, indices.size() - start);
    const Batch batch = gather(ds, indices.subspan(start, len));
    const Tensor y = model.network.forward(batch.images, batch.configs, Mode::kInfer);
    std::copy(y.data(), y.data() + y.size(), out.data() + start * out_len);
  }
  return out;
}

Metrics evaluate(SurrogateModel& model, const Dataset& ds, std::span<const std::uint32_t> indices,
                 double delta, double* huber_out) {
  if (indices.empty()) throw UsageError("cannot evaluate an empty split");
  const Tensor pred = predict_normalized(model, ds, indices);
  Tensor target({static_cast<int>(indices.size()), kSpectrumPoints});
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const auto t = ds.target(indices[n]);
    std::copy(t.begin(), t.end(), target.data() + n * kSpectrumPoints);
  }
  if (huber_out) *huber_out = huber_loss(pred, target, delta).loss;
  return compute_metrics(pred, target);
}

Prediction interpret(std::span<const float> row) {
  if (row.size() != kSpectrumPoints) {
    throw UsageError("prediction row must have " + std::to_string(kSpectrumPoints) + " values");
  }
  Prediction p;
  for (int i = 0; i < kSpectrumPoints; ++i) {
    p.spectrum.s11_db[i] = std::clamp(denormalize_db(row[static_cast<std::size_t>(i)]), kDbFloor, kDbCeil);
  }
  p.absorption = absorption(p.spectrum);
  p.bands = band_below_threshold(p.spectrum, -10.0);
  return p;
}

Prediction predict(SurrogateModel& model, const RasterGrid& image, const ConfigVector& config) {
  const int r = model.descriptor().input_resolution;
  if (image.resolution() != r) {
    throw UsageError("image resolution " + std::to_string(image.resolution()) +
                     " does not match model input resolution " + std::to_string(r));
  }
  Tensor images({1, 1, r, r},
                std::vector<float>(image.pixels().begin(), image.pixels().end()));
  Tensor configs({1, kConfigLength}, std::vector<float>(config.begin(), config.end()));
  const Tensor y = model.network.forward(images, configs, Mode::kInfer);
  return interpret(y.values());
}

}  // namespace rasnet
