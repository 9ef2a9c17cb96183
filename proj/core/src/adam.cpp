#include "rasnet/adam.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "rasnet/error.hpp"
#include "rasnet/io.hpp"

namespace rasnet {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw DataError("adam state: truncated");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  pos += 8;
  return x;
}

void put_f64(std::vector<std::uint8_t>& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::span<const std::uint8_t> in, std::size_t& pos) {
  return std::bit_cast<double>(get_u64(in, pos));
}

void put_floats(std::vector<std::uint8_t>& out, const std::vector<float>& xs) {
  put_u64(out, xs.size());
  const auto bytes = io::encode_f32_le(xs);
  out.insert(out.end(), bytes.begin(), bytes.end());
}

std::vector<float> get_floats(std::span<const std::uint8_t> in, std::size_t& pos) {
  const std::uint64_t n = get_u64(in, pos);
  if (n > (in.size() - pos) / 4) throw DataError("adam state: truncated moment tensor");
  auto out = io::decode_f32_le(in.subspan(pos, n * 4));
  pos += n * 4;
  return out;
}

constexpr std::uint64_t kMagic = 0x314d414454534152ULL;  // "RASTDAM1"

}  // namespace

std::vector<std::uint8_t> AdamState::serialize() const {
  std::vector<std::uint8_t> out;
  put_u64(out, kMagic);
  put_f64(out, config.learning_rate);
  put_f64(out, config.beta1);
  put_f64(out, config.beta2);
  put_f64(out, config.epsilon);
  put_u64(out, step);
  put_u64(out, m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    put_floats(out, m[i]);
    put_floats(out, v[i]);
  }
  return out;
}

AdamState AdamState::deserialize(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (get_u64(bytes, pos) != kMagic) throw DataError("adam state: bad magic");
  AdamState s;
  s.config.learning_rate = get_f64(bytes, pos);
  s.config.beta1 = get_f64(bytes, pos);
  s.config.beta2 = get_f64(bytes, pos);
  s.config.epsilon = get_f64(bytes, pos);
  s.step = get_u64(bytes, pos);
  const std::uint64_t count = get_u64(bytes, pos);
  for (std::uint64_t i = 0; i < count; ++i) {
    s.m.push_back(get_floats(bytes, pos));
    s.v.push_back(get_floats(bytes, pos));
  }
  if (pos != bytes.size()) throw DataError("adam state: trailing bytes");
  return s;
}

void adam_step(std::span<Param<float>* const> params, AdamState& state) {
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->value.size(), 0.0f);
      state.v.emplace_back(p->value.size(), 0.0f);
    }
  }
  if (state.m.size() != params.size()) {
    throw UsageError("adam: parameter count changed between steps");
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  const auto b1 = static_cast<float>(c.beta1);
  const auto b2 = static_cast<float>(c.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.value.size() || p.grad.size() != p.value.size()) {
      throw UsageError("adam: moment shape does not match parameter '" + p.name + "'");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const float g = p.grad[i];
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p.value[i] = static_cast<float>(p.value[i] - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
  }
}

}  // namespace rasnet
