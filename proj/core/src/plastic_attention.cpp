#include "ptx/plastic_attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ptx/error.hpp"
#include "ptx/numerics.hpp"

namespace ptx {

std::int64_t encode_signed_trace(std::int64_t k, const QuantSpec& trace_spec, std::size_t* saturations) {
  if (k % 2 != 0) throw std::invalid_argument("encode_signed_trace: k must be even, got " + std::to_string(k));
  const std::int64_t u = k / 2 + kTraceZeroPoint;
  const std::int64_t clamped = std::clamp(u, trace_spec.min_code(), trace_spec.max_code());
  if (clamped != u && saturations) ++*saturations;
  return clamped;
}

double encode_signed_trace(double k) noexcept { return 0.5 * k + static_cast<double>(kTraceZeroPoint); }

std::int64_t decode_signed_trace(std::int64_t u) noexcept { return 2 * (u - kTraceZeroPoint); }

template <class T>
PlasticAttentionHead<T>::PlasticAttentionHead(std::size_t head_dim, std::size_t window, ConnectionLimits keys_limits,
                                              ConnectionLimits values_limits, std::vector<std::size_t> slot_order)
    : head_dim_(head_dim),
      scheduler_(window, std::move(slot_order)),
      keys_(window, head_dim, parse_rule(kKeysRule), GradedSpikeMode::Overwrite, keys_limits),
      values_(head_dim, window, parse_rule(kValuesRule), GradedSpikeMode::Overwrite, values_limits) {}

template <class T>
void PlasticAttentionHead<T>::write_key(std::span<const T> k) {
  if (k.size() != head_dim_) throw ShapeError("write_key: expected " + std::to_string(head_dim_) + " components");
  std::vector<GradedSpike<T>> spikes(k.size());
  for (std::size_t j = 0; j < k.size(); ++j) {
    T u{};
    if constexpr (std::is_integral_v<T>) {
      u = encode_signed_trace(k[j], *keys_.limits().trace, &encode_saturations_);
    } else {
      u = encode_signed_trace(k[j]);
    }
    spikes[j] = {j, u};
  }
  keys_.write_pre_trace(spikes, PreTrace::X1);
  keys_.trigger_post(scheduler_.next_slot());
}

template <class T>
std::vector<T> PlasticAttentionHead<T>::scores(std::span<const T> q) const {
  if (q.size() != head_dim_) throw ShapeError("scores: expected " + std::to_string(head_dim_) + " components");
  std::vector<GradedSpike<T>> spikes(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) spikes[j] = {j, q[j]};
  const std::vector<T> all = keys_.propagate(spikes);
  const auto slots = mask();
  std::vector<T> out(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) out[i] = all[slots[i]];
  return out;
}

template <class T>
void PlasticAttentionHead<T>::write_value(std::span<const T> v) {
  if (v.size() != head_dim_) throw ShapeError("write_value: expected " + std::to_string(head_dim_) + " components");
  std::vector<T> pos(v.size()), neg(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    pos[i] = v[i] > T{} ? v[i] : T{};
    neg[i] = v[i] < T{} ? -v[i] : T{};
  }
  const std::vector<T> ones(v.size(), T{1});
  values_.write_post_trace(pos, PostTrace::Y2);
  values_.write_post_trace(neg, PostTrace::Y3);
  values_.write_post_trace(ones, PostTrace::Y1);
  values_.trigger_pre(scheduler_.next_slot());
}

template <class T>
std::vector<T> PlasticAttentionHead<T>::read(std::span<const T> p) const {
  const auto slots = mask();
  if (p.size() != slots.size()) throw ShapeError("read: probabilities must cover the filled slots");
  std::vector<GradedSpike<T>> spikes(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) spikes[i] = {slots[i], p[i]};
  return values_.propagate(spikes);
}

template class PlasticAttentionHead<double>;
template class PlasticAttentionHead<std::int64_t>;

namespace {

std::vector<std::int64_t> to_codes(std::span<const double> values, const QuantSpec& spec) {
  std::vector<std::int64_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = quantize_value(values[i], spec);
  return out;
}

}  // namespace

PlasticAttentionLayer::PlasticAttentionLayer(const AttentionWeights& weights, const ModelConfig& config,
                                             Kernels kernels, std::vector<std::size_t> slot_order)
    : weights_(&weights), config_(config), kernels_(kernels) {
  config_.validate();
  if (weights.wq.rows() != config.dim || weights.wq.cols() != config.dim || weights.wo.rows() != config.dim) {
    throw ShapeError("PlasticAttentionLayer: projection shapes disagree with the config");
  }
  const std::size_t dh = config_.head_dim();
  if (kernels_.quantized()) {
    const auto& q = kernels_.quant();
    // Keys rows hold k codes; values columns hold v codes. Both traces are unsigned.
    const ConnectionLimits keys{q.keys, q.traces};
    const ConnectionLimits values{q.values, q.traces};
    std::vector<PlasticAttentionHead<std::int64_t>> heads;
    for (std::size_t h = 0; h < config_.heads; ++h) heads.emplace_back(dh, config_.window, keys, values, slot_order);
    heads_ = std::move(heads);
  } else {
    std::vector<PlasticAttentionHead<double>> heads;
    for (std::size_t h = 0; h < config_.heads; ++h) heads.emplace_back(dh, config_.window, ConnectionLimits{}, ConnectionLimits{}, slot_order);
    heads_ = std::move(heads);
  }
}

const PlasticAttentionHead<double>& PlasticAttentionLayer::float_head(std::size_t h) const {
  const auto* heads = std::get_if<std::vector<PlasticAttentionHead<double>>>(&heads_);
  if (!heads) throw std::logic_error("float_head: layer runs in integer mode");
  return heads->at(h);
}

const PlasticAttentionHead<std::int64_t>& PlasticAttentionLayer::integer_head(std::size_t h) const {
  const auto* heads = std::get_if<std::vector<PlasticAttentionHead<std::int64_t>>>(&heads_);
  if (!heads) throw std::logic_error("integer_head: layer runs in float mode");
  return heads->at(h);
}

template <class T>
Vec PlasticAttentionLayer::run_heads(std::vector<PlasticAttentionHead<T>>& heads, const QkvProjection& qkv) {
  const std::size_t dh = config_.head_dim();
  const double score_scale = config_.scaled_attention ? 1.0 / std::sqrt(static_cast<double>(dh)) : 1.0;
  const auto& fmt = kernels_.quant();
  Vec concat(config_.dim, 0.0);
  last_.probs.assign(heads.size(), {});

  for (std::size_t h = 0; h < heads.size(); ++h) {
    auto& head = heads[h];
    const auto slice = [&](const Vec& v) { return std::span<const double>(v).subspan(h * dh, dh); };

    Vec scores;
    if constexpr (std::is_integral_v<T>) {
      const auto k = to_codes(slice(qkv.k), fmt.keys);
      head.write_key(k);
      const auto acc = head.scores(to_codes(slice(qkv.q), fmt.activation));
      scores.resize(acc.size());
      for (std::size_t i = 0; i < acc.size(); ++i) {
        scores[i] = std::ldexp(static_cast<double>(acc[i]), fmt.keys.exponent + fmt.activation.exponent);
      }
    } else {
      head.write_key(slice(qkv.k));
      scores = head.scores(slice(qkv.q));
    }
    for (double& s : scores) s *= score_scale;

    Vec p = kernels_.attention_probs(scores);

    Vec y;
    if constexpr (std::is_integral_v<T>) {
      head.write_value(to_codes(slice(qkv.v), fmt.values));
      const auto acc = head.read(to_codes(p, fmt.probs));
      y.resize(acc.size());
      for (std::size_t i = 0; i < acc.size(); ++i) {
        y[i] = std::ldexp(static_cast<double>(acc[i]), fmt.values.exponent + fmt.probs.exponent);
      }
    } else {
      head.write_value(slice(qkv.v));
      y = head.read(p);
    }
    y = kernels_.activation(std::move(y));
    std::copy(y.begin(), y.end(), concat.begin() + static_cast<std::ptrdiff_t>(h * dh));
    last_.probs[h] = std::move(p);
    head.advance();
  }
  return concat;
}

Vec PlasticAttentionLayer::attend_step(std::span<const double> x, std::size_t t) {
  if (t != tokens_) {
    throw std::invalid_argument("attend_step: token index " + std::to_string(t) + " but the cache has seen " +
                                std::to_string(tokens_));
  }
  if (x.size() != config_.dim) throw ShapeError("attend_step: input length differs from dim");
  last_.qkv = project_qkv(*weights_, x, kernels_);
  const Vec concat = std::visit([&](auto& heads) { return run_heads(heads, last_.qkv); }, heads_);
  ++tokens_;
  return kernels_.activation(add(vmm(weights_->wo, concat), weights_->bo));
}

}  // namespace ptx
