#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "ptx/kernels.hpp"
#include "ptx/model.hpp"
#include "ptx/plasticity.hpp"
#include "ptx/slot_scheduler.hpp"

namespace ptx {

/// Zero point of the signed-to-unsigned trace encoding u = k/2 + 64.
inline constexpr std::int64_t kTraceZeroPoint = 64;

/// u = k/2 + 64. k must be even; results outside the trace format saturate
/// and increment *saturations.
std::int64_t encode_signed_trace(std::int64_t k, const QuantSpec& trace_spec, std::size_t* saturations = nullptr);
double encode_signed_trace(double k) noexcept;
/// 2 * (u - 64)
std::int64_t decode_signed_trace(std::int64_t u) noexcept;

/// One attention head whose KV-cache lives in two plastic connections:
///  keys:   W x D_h, pre = q/k components, post = score neurons, rule kKeysRule
///  values: D_h x W, pre = probability neurons, post = y components, rule kValuesRule
template <class T>
class PlasticAttentionHead {
 public:
  PlasticAttentionHead(std::size_t head_dim, std::size_t window, ConnectionLimits keys_limits = {},
                       ConnectionLimits values_limits = {}, std::vector<std::size_t> slot_order = {});

  std::size_t head_dim() const noexcept { return head_dim_; }

  /// x1 := encode(k) as overwriting graded spikes, then y0 on the current slot.
  void write_key(std::span<const T> k);
  /// Key-cache propagation of q, restricted to the filled slots (oldest first).
  std::vector<T> scores(std::span<const T> q) const;
  /// y2 := max(v, 0), y3 := max(-v, 0), y1 := 1, then x0 on the current slot.
  void write_value(std::span<const T> v);
  /// Value-cache propagation of p, given over the filled slots (oldest first).
  std::vector<T> read(std::span<const T> p) const;
  void advance() noexcept { scheduler_.advance(); }

  /// Filled slots including the current token's.
  std::vector<std::size_t> mask() const { return slot_mask(scheduler_, scheduler_.tokens_seen()); }
  const SlotScheduler& scheduler() const noexcept { return scheduler_; }
  const LearningConnection<T>& keys() const noexcept { return keys_; }
  const LearningConnection<T>& values() const noexcept { return values_; }
  std::size_t encode_saturations() const noexcept { return encode_saturations_; }

 private:
  std::size_t head_dim_;
  SlotScheduler scheduler_;
  LearningConnection<T> keys_;
  LearningConnection<T> values_;
  std::size_t encode_saturations_ = 0;
};

extern template class PlasticAttentionHead<double>;
extern template class PlasticAttentionHead<std::int64_t>;

/// Per-head intermediate values of the most recent step.
struct AttentionStepRecord {
  QkvProjection qkv;
  std::vector<Vec> probs;  // per head, over filled slots oldest first
};

/// Self-attention block with plastic KV-caches. Float precision runs
/// double-valued connections; Quant precision runs integer connections
/// holding cache codes, with the formats taken from config.quant.
class PlasticAttentionLayer {
 public:
  /// `weights` must outlive the layer.
  PlasticAttentionLayer(const AttentionWeights& weights, const ModelConfig& config, Kernels kernels,
                        std::vector<std::size_t> slot_order = {});

  /// Process token t (must equal tokens_seen()) and return z_t.
  Vec attend_step(std::span<const double> x, std::size_t t);

  std::size_t tokens_seen() const noexcept { return tokens_; }
  std::size_t head_count() const noexcept { return config_.heads; }
  bool integer_mode() const noexcept { return kernels_.quantized(); }
  /// Throws std::logic_error if the precision does not match.
  const PlasticAttentionHead<double>& float_head(std::size_t h) const;
  const PlasticAttentionHead<std::int64_t>& integer_head(std::size_t h) const;
  const AttentionStepRecord& last_step() const noexcept { return last_; }

 private:
  template <class T>
  Vec run_heads(std::vector<PlasticAttentionHead<T>>& heads, const QkvProjection& qkv);

  const AttentionWeights* weights_;
  ModelConfig config_;
  Kernels kernels_;
  std::variant<std::vector<PlasticAttentionHead<double>>, std::vector<PlasticAttentionHead<std::int64_t>>> heads_;
  std::size_t tokens_ = 0;
  AttentionStepRecord last_;
};

}  // namespace ptx
