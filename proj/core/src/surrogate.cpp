#include "rasnet/surrogate.hpp"

#include <string>

#include "rasnet/error.hpp"

namespace rasnet {

int ArchitectureDescriptor::flattened_size() const {
  const int side = input_resolution / 16;
  return conv_channels[3] * side * side;
}

void ArchitectureDescriptor::validate() const {
  if (input_resolution < 16 || input_resolution % 16 != 0) {
    throw UsageError("input resolution must be a positive multiple of 16, got " +
                     std::to_string(input_resolution));
  }
  for (int c : conv_channels) {
    if (c <= 0) throw UsageError("conv channel counts must be positive");
  }
  for (int w : fc_hidden) {
    if (w <= 0) throw UsageError("fully connected widths must be positive");
  }
  if (config_length < 0 || output_length <= 0) {
    throw UsageError("invalid config or output length");
  }
}

template <typename T>
ConvBlock<T>::ConvBlock(int in_channels, int out_channels)
    : conv1(in_channels, out_channels),
      bn1(out_channels),
      conv2(out_channels, out_channels),
      bn2(out_channels) {}

template <typename T>
Network<T>::Network(const ArchitectureDescriptor& d, std::uint64_t seed) : descriptor_(d) {
  d.validate();
  int in = 1;
  for (int c : d.conv_channels) {
    blocks_.emplace_back(in, c);
    in = c;
  }
  flat_ = d.flattened_size();
  int width = d.fc_input_size();
  for (int h : d.fc_hidden) {
    fc_.emplace_back(width, h);
    fc_act_.emplace_back();
    width = h;
  }
  fc_.emplace_back(width, d.output_length);

  Rng rng = Rng::stream(seed, 0, /*domain=*/0x1417);
  for (auto& b : blocks_) {
    b.conv1.init(rng);
    b.conv2.init(rng);
  }
  for (auto& l : fc_) l.init(rng);
}

template <typename T>
BasicTensor<T> Network<T>::forward(const BasicTensor<T>& images, const BasicTensor<T>& configs,
                                   Mode mode) {
  const int r = descriptor_.input_resolution;
  if (images.rank() != 4 || images.dim(1) != 1 || images.dim(2) != r || images.dim(3) != r) {
    throw UsageError("surrogate forward: expected images [B, 1, " + std::to_string(r) + ", " +
                     std::to_string(r) + "], got " + shape_string(images.shape()));
  }
  const int batch = images.dim(0);
  check_shape(configs, {batch, descriptor_.config_length}, "surrogate forward configs");

  const BasicTensor<T>* x = &images;
  for (auto& b : blocks_) {
    x = &b.act1.forward(b.bn1.forward(b.conv1.forward(*x), mode));
    x = &b.act2.forward(b.bn2.forward(b.conv2.forward(*x), mode));
    x = &b.pool.forward(*x);
    check_finite(*x, "conv block output");
  }

  const int cfg = descriptor_.config_length;
  joined_.resize({batch, flat_ + cfg});
  for (int n = 0; n < batch; ++n) {
    const T* f = x->data() + static_cast<std::size_t>(n) * flat_;
    const T* c = configs.data() + static_cast<std::size_t>(n) * cfg;
    T* out = joined_.data() + static_cast<std::size_t>(n) * (flat_ + cfg);
    std::copy(f, f + flat_, out);
    std::copy(c, c + cfg, out + flat_);
  }

  x = &joined_;
  for (std::size_t i = 0; i < fc_.size(); ++i) {
    x = &fc_[i].forward(*x);
    if (i < fc_act_.size()) x = &fc_act_[i].forward(*x);
  }
  check_finite(*x, "surrogate output");
  return *x;
}

template <typename T>
typename Network<T>::InputGradients Network<T>::backward(const BasicTensor<T>& d_output) {
  const BasicTensor<T>* g = &d_output;
  for (std::size_t i = fc_.size(); i-- > 0;) {
    if (i < fc_act_.size()) g = &fc_act_[i].backward(*g);
    g = &fc_[i].backward(*g);
  }
  const int batch = g->dim(0);
  const int cfg = descriptor_.config_length;
  const int side = descriptor_.input_resolution / 16;
  InputGradients out;
  out.configs = BasicTensor<T>({batch, cfg});
  d_flat_.resize({batch, descriptor_.conv_channels[3], side, side});
  for (int n = 0; n < batch; ++n) {
    const T* row = g->data() + static_cast<std::size_t>(n) * (flat_ + cfg);
    std::copy(row, row + flat_, d_flat_.data() + static_cast<std::size_t>(n) * flat_);
    std::copy(row + flat_, row + flat_ + cfg,
              out.configs.data() + static_cast<std::size_t>(n) * cfg);
  }

  g = &d_flat_;
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    auto& b = blocks_[i];
    g = &b.pool.backward(*g);
    g = &b.conv2.backward(b.bn2.backward(b.act2.backward(*g)));
    g = &b.conv1.backward(b.bn1.backward(b.act1.backward(*g)));
  }
  out.images = *g;
  return out;
}

template <typename T>
std::vector<std::uint32_t> Network<T>::activation_pattern() const {
  std::vector<std::uint32_t> out;
  const auto signs = [&](const LeakyRelu<T>& a) {
    for (T v : a.output().values()) out.push_back(v > T(0));
  };
  for (const auto& b : blocks_) {
    signs(b.act1);
    signs(b.act2);
    for (std::size_t i : b.pool.argmax()) out.push_back(static_cast<std::uint32_t>(i));
  }
  for (const auto& a : fc_act_) signs(a);
  return out;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(T(0));
}

template <typename T>
std::vector<Param<T>*> Network<T>::parameters() {
  std::vector<Param<T>*> out;
  for (auto& b : blocks_) {
    for (auto* p : {&b.conv1.weight, &b.conv1.bias, &b.bn1.gamma, &b.bn1.beta, &b.conv2.weight,
                    &b.conv2.bias, &b.bn2.gamma, &b.bn2.beta}) {
      out.push_back(p);
    }
  }
  for (auto& l : fc_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, BasicTensor<T>*>> Network<T>::state() {
  std::vector<std::pair<std::string, BasicTensor<T>*>> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    auto& b = blocks_[i];
    const std::string p = "block" + std::to_string(i) + ".";
    out.emplace_back(p + "conv1.weight", &b.conv1.weight.value);
    out.emplace_back(p + "conv1.bias", &b.conv1.bias.value);
    out.emplace_back(p + "bn1.gamma", &b.bn1.gamma.value);
    out.emplace_back(p + "bn1.beta", &b.bn1.beta.value);
    out.emplace_back(p + "bn1.running_mean", &b.bn1.running_mean);
    out.emplace_back(p + "bn1.running_var", &b.bn1.running_var);
    out.emplace_back(p + "conv2.weight", &b.conv2.weight.value);
    out.emplace_back(p + "conv2.bias", &b.conv2.bias.value);
    out.emplace_back(p + "bn2.gamma", &b.bn2.gamma.value);
    out.emplace_back(p + "bn2.beta", &b.bn2.beta.value);
    out.emplace_back(p + "bn2.running_mean", &b.bn2.running_mean);
    out.emplace_back(p + "bn2.running_var", &b.bn2.running_var);
  }
  for (std::size_t i = 0; i < fc_.size(); ++i) {
    const std::string p = "fc" + std::to_string(i) + ".";
    out.emplace_back(p + "weight", &fc_[i].weight.value);
    out.emplace_back(p + "bias", &fc_[i].bias.value);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const BasicTensor<T>*>> Network<T>::state() const {
  auto mut = const_cast<Network<T>*>(this)->state();
  return {mut.begin(), mut.end()};
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  Network<U> out(descriptor_, 0);
  auto dst = out.state();
  const auto src = state();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto& s = *src[i].second;
    auto& d = *dst[i].second;
    for (std::size_t k = 0; k < s.size(); ++k) d[k] = static_cast<U>(s[k]);
  }
  return out;
}

template struct ConvBlock<float>;
template struct ConvBlock<double>;
template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;

SurrogateModel build(const ArchitectureDescriptor& descriptor, std::uint64_t seed) {
  return SurrogateModel{Network<float>(descriptor, seed), {}, std::nullopt};
}

}  // namespace rasnet
