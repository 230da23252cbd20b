#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ptx/quant.hpp"
#include "ptx/rule.hpp"

namespace ptx {

/// An event carrying an integer (or, in float mode, real) payload.
template <class T>
struct GradedSpike {
  std::size_t neuron = 0;
  T payload{};
};

enum class GradedSpikeMode { Overwrite, Accumulate };
enum class PreTrace { X1, X2 };
enum class PostTrace { Y1, Y2, Y3 };

template <class T>
struct TraceState {
  std::vector<T> x1, x2;      // per pre-synaptic neuron
  std::vector<T> y1, y2, y3;  // per post-synaptic neuron
};

/// Storage formats of an integer connection. Absent specs mean the connection
/// is unconstrained, which is how the float mode runs.
struct ConnectionLimits {
  std::optional<QuantSpec> weight;
  std::optional<QuantSpec> trace;
};

/// Plastic dense connection pre -> post. Weights are posts x pres, row-major.
///
/// Learning only happens on explicit triggers: trigger_post(i) applies the
/// rule to every synapse of row i with y0 = 1, x0 = 0; trigger_pre(j) to every
/// synapse of column j with x0 = 1, y0 = 0. Updated weights saturate at the
/// weight format's range.
template <class T>
class LearningConnection {
 public:
  LearningConnection(std::size_t posts, std::size_t pres, RuleExpr rule,
                     GradedSpikeMode mode = GradedSpikeMode::Overwrite, ConnectionLimits limits = {});

  std::size_t posts() const noexcept { return posts_; }
  std::size_t pres() const noexcept { return pres_; }
  const RuleExpr& rule() const noexcept { return rule_; }
  GradedSpikeMode mode() const noexcept { return mode_; }
  const ConnectionLimits& limits() const noexcept { return limits_; }

  /// weights * dense(spikes). Repeated indices accumulate. Throws std::out_of_range.
  std::vector<T> propagate(std::span<const GradedSpike<T>> spikes) const;

  /// Overwrite: trace[j] := payload (throws std::out_of_range if the payload
  /// is not representable). Accumulate: trace[j] += payload, saturating.
  void write_pre_trace(std::span<const GradedSpike<T>> spikes, PreTrace trace);
  /// Overwrites the named post trace array. Throws on length or range violation.
  void write_post_trace(std::span<const T> values, PostTrace trace);

  void trigger_post(std::size_t post);
  void trigger_pre(std::size_t pre);

  T weight(std::size_t post, std::size_t pre) const { return weights_.at(post * pres_ + pre); }
  std::span<const T> weights() const noexcept { return weights_; }
  std::span<const T> row(std::size_t post) const;
  void set_weights(std::vector<T> weights);

  const TraceState<T>& traces() const noexcept { return traces_; }
  /// Number of weight updates and accumulations clipped by saturation.
  std::size_t saturation_count() const noexcept { return saturations_; }

 private:
  void apply(std::size_t post, std::size_t pre, FactorBinding<T>& binding);
  T saturate_weight(T w);
  T saturate_trace(T v);
  void check_trace_value(T v) const;

  std::size_t posts_;
  std::size_t pres_;
  RuleExpr rule_;
  GradedSpikeMode mode_;
  ConnectionLimits limits_;
  std::vector<T> weights_;
  TraceState<T> traces_;
  std::size_t saturations_ = 0;
};

extern template class LearningConnection<double>;
extern template class LearningConnection<std::int64_t>;

}  // namespace ptx
