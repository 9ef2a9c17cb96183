#include <string>

#include <json.hpp>

#include "rasnet/error.hpp"
#include "rasnet/io.hpp"
#include "rasnet/surrogate.hpp"

namespace rasnet {

namespace {

using nlohmann::json;

constexpr const char* kModelJson = "model.json";
constexpr const char* kWeightsFile = "weights.f32";

json to_json(const ArchitectureDescriptor& d) {
  return {{"input_resolution", d.input_resolution},
          {"conv_channels", d.conv_channels},
          {"config_length", d.config_length},
          {"fc_hidden", d.fc_hidden},
          {"output_length", d.output_length},
          {"block", "conv3x3-bn-leakyrelu x2, maxpool2x2"},
          {"output_activation", "linear"}};
}

ArchitectureDescriptor descriptor_from_json(const json& j) {
  ArchitectureDescriptor d;
  d.input_resolution = j.at("input_resolution").get<int>();
  d.conv_channels = j.at("conv_channels").get<std::array<int, 4>>();
  d.config_length = j.at("config_length").get<int>();
  d.fc_hidden = j.at("fc_hidden").get<std::vector<int>>();
  d.output_length = j.at("output_length").get<int>();
  return d;
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},     {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
          {"beta2", c.beta2},       {"delta", c.delta},
          {"seed", c.seed},         {"deterministic", c.deterministic}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.delta = j.at("delta").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.deterministic = j.at("deterministic").get<bool>();
  return c;
}

json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},         {"train_huber", r.train_huber}, {"train_mse", r.train_mse},
          {"train_mae", r.train_mae}, {"train_cs", r.train_cs},       {"val_huber", r.val_huber},
          {"val_mse", r.val_mse},     {"val_mae", r.val_mae},         {"val_cs", r.val_cs},
          {"seconds", r.seconds}};
}

EpochRecord record_from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.train_huber = j.at("train_huber").get<double>();
  r.train_mse = j.at("train_mse").get<double>();
  r.train_mae = j.at("train_mae").get<double>();
  r.train_cs = j.at("train_cs").get<double>();
  r.val_huber = j.at("val_huber").get<double>();
  r.val_mse = j.at("val_mse").get<double>();
  r.val_mae = j.at("val_mae").get<double>();
  r.val_cs = j.at("val_cs").get<double>();
  r.seconds = j.at("seconds").get<double>();
  return r;
}

}  // namespace

void save_model(const SurrogateModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> weights;
  json tensors = json::array();
  for (const auto& [name, t] : model.network.state()) {
    const auto bytes = io::encode_f32_le(t->values());
    tensors.push_back({{"name", name},
                       {"shape", t->shape()},
                       {"offset", weights.size()},
                       {"count", t->size()},
                       {"crc32", io::crc32(bytes)}});
    weights.insert(weights.end(), bytes.begin(), bytes.end());
  }

  json history = json::array();
  for (const auto& r : model.history.epochs) history.push_back(to_json(r));

  json m;
  m["format_version"] = kModelFormatVersion;
  m["descriptor"] = to_json(model.descriptor());
  m["train_config"] = model.train_config ? to_json(*model.train_config) : json(nullptr);
  m["history"] = {{"best_epoch", model.history.best_epoch},
                  {"best_val_mse", model.history.best_val_mse},
                  {"epochs", history}};
  m["weights_file"] = kWeightsFile;
  m["weights_bytes"] = weights.size();
  m["weights_crc32"] = io::crc32(weights);
  m["tensors"] = tensors;

  io::write_file_atomic(dir / kWeightsFile, weights);
  io::write_file_atomic(dir / kModelJson, m.dump(2) + "\n");
}

SurrogateModel load_model(const std::filesystem::path& dir, const ArchitectureDescriptor* expected) {
  const auto json_path = dir / kModelJson;
  if (!std::filesystem::exists(json_path)) throw DataError("missing " + json_path.string());
  json m;
  try {
    m = json::parse(io::read_text(json_path));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model.json: ") + e.what());
  }
  try {
    if (m.at("format_version").get<int>() != kModelFormatVersion) {
      throw DataError("unsupported model format_version " + m.at("format_version").dump());
    }
    const ArchitectureDescriptor d = descriptor_from_json(m.at("descriptor"));
    try {
      d.validate();
    } catch (const UsageError& e) {
      throw DataError(std::string("invalid stored descriptor: ") + e.what());
    }
    if (expected && !(*expected == d)) {
      throw DataError("stored model descriptor (resolution " +
                      std::to_string(d.input_resolution) +
                      ") does not match the expected architecture (resolution " +
                      std::to_string(expected->input_resolution) + ")");
    }

    const auto weights = io::read_file(dir / m.at("weights_file").get<std::string>());
    if (weights.size() != m.at("weights_bytes").get<std::size_t>()) {
      throw DataError("weights file size " + std::to_string(weights.size()) +
                      " does not match model.json");
    }
    if (io::crc32(weights) != m.at("weights_crc32").get<std::uint32_t>()) {
      throw DataError("weights file CRC32 mismatch");
    }

    SurrogateModel model = build(d, 0);
    auto state = model.network.state();
    const auto& tensors = m.at("tensors");
    if (tensors.size() != state.size()) throw DataError("tensor count does not match descriptor");
    for (std::size_t i = 0; i < state.size(); ++i) {
      const auto& e = tensors[i];
      auto& [name, t] = state[i];
      if (e.at("name").get<std::string>() != name ||
          e.at("shape").get<std::vector<int>>() != t->shape()) {
        throw DataError("tensor '" + e.at("name").get<std::string>() +
                        "' does not match the descriptor layout");
      }
      const auto offset = e.at("offset").get<std::size_t>();
      const auto bytes = t->size() * 4;
      if (offset + bytes > weights.size()) throw DataError("tensor '" + name + "' truncated");
      const std::span<const std::uint8_t> chunk(weights.data() + offset, bytes);
      if (io::crc32(chunk) != e.at("crc32").get<std::uint32_t>()) {
        throw DataError("tensor '" + name + "' CRC32 mismatch");
      }
      t->storage() = io::decode_f32_le(chunk);
    }

    if (!m.at("train_config").is_null()) {
      model.train_config = train_config_from_json(m.at("train_config"));
    }
    const auto& h = m.at("history");
    model.history.best_epoch = h.at("best_epoch").get<int>();
    model.history.best_val_mse = h.at("best_val_mse").get<double>();
    for (const auto& r : h.at("epochs")) model.history.epochs.push_back(record_from_json(r));
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model.json: ") + e.what());
  }
}

}  // namespace rasnet
