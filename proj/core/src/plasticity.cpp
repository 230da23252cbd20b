#include "ptx/plasticity.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ptx {

namespace {

void check_index(std::size_t index, std::size_t count, const char* what) {
  if (index >= count) {
    throw std::out_of_range(std::string(what) + " index " + std::to_string(index) + " >= " + std::to_string(count));
  }
}

}  // namespace

template <class T>
LearningConnection<T>::LearningConnection(std::size_t posts, std::size_t pres, RuleExpr rule, GradedSpikeMode mode,
                                          ConnectionLimits limits)
    : posts_(posts),
      pres_(pres),
      rule_(std::move(rule)),
      mode_(mode),
      limits_(limits),
      weights_(posts * pres, T{}) {
  if (limits_.weight) limits_.weight->validate();
  if (limits_.trace) {
    limits_.trace->validate();
    if (limits_.trace->is_signed) throw std::invalid_argument("LearningConnection: traces must be unsigned");
  }
  traces_.x1.assign(pres, T{});
  traces_.x2.assign(pres, T{});
  traces_.y1.assign(posts, T{});
  traces_.y2.assign(posts, T{});
  traces_.y3.assign(posts, T{});
}

template <class T>
std::vector<T> LearningConnection<T>::propagate(std::span<const GradedSpike<T>> spikes) const {
  std::vector<T> dense(pres_, T{});
  for (const auto& s : spikes) {
    check_index(s.neuron, pres_, "propagate: pre");
    dense[s.neuron] += s.payload;
  }
  std::vector<T> out(posts_, T{});
  for (std::size_t i = 0; i < posts_; ++i) {
    const T* w = weights_.data() + i * pres_;
    T acc{};
    for (std::size_t j = 0; j < pres_; ++j) acc += w[j] * dense[j];
    out[i] = acc;
  }
  return out;
}

template <class T>
void LearningConnection<T>::write_pre_trace(std::span<const GradedSpike<T>> spikes, PreTrace trace) {
  auto& target = trace == PreTrace::X1 ? traces_.x1 : traces_.x2;
  for (const auto& s : spikes) check_index(s.neuron, pres_, "write_pre_trace: pre");
  for (const auto& s : spikes) {
    if (mode_ == GradedSpikeMode::Overwrite) {
      check_trace_value(s.payload);
      target[s.neuron] = s.payload;
    } else {
      target[s.neuron] = saturate_trace(target[s.neuron] + s.payload);
    }
  }
}

template <class T>
void LearningConnection<T>::write_post_trace(std::span<const T> values, PostTrace trace) {
  if (values.size() != posts_) {
    throw std::invalid_argument("write_post_trace: expected " + std::to_string(posts_) + " values, got " +
                                std::to_string(values.size()));
  }
  for (T v : values) check_trace_value(v);
  auto& target = trace == PostTrace::Y1 ? traces_.y1 : trace == PostTrace::Y2 ? traces_.y2 : traces_.y3;
  target.assign(values.begin(), values.end());
}

template <class T>
void LearningConnection<T>::apply(std::size_t post, std::size_t pre, FactorBinding<T>& binding) {
  T& w = weights_[post * pres_ + pre];
  binding.set(FactorKind::X1, traces_.x1[pre]).set(FactorKind::X2, traces_.x2[pre]).set(FactorKind::W, w);
  w = saturate_weight(w + evaluate_rule(rule_, binding));
}

template <class T>
void LearningConnection<T>::trigger_post(std::size_t post) {
  check_index(post, posts_, "trigger_post: post");
  FactorBinding<T> binding;
  binding.set(FactorKind::X0, T{0})
      .set(FactorKind::Y0, T{1})
      .set(FactorKind::Y1, traces_.y1[post])
      .set(FactorKind::Y2, traces_.y2[post])
      .set(FactorKind::Y3, traces_.y3[post]);
  for (std::size_t j = 0; j < pres_; ++j) apply(post, j, binding);
}

template <class T>
void LearningConnection<T>::trigger_pre(std::size_t pre) {
  check_index(pre, pres_, "trigger_pre: pre");
  FactorBinding<T> binding;
  binding.set(FactorKind::X0, T{1}).set(FactorKind::Y0, T{0});
  for (std::size_t i = 0; i < posts_; ++i) {
    binding.set(FactorKind::Y1, traces_.y1[i]).set(FactorKind::Y2, traces_.y2[i]).set(FactorKind::Y3, traces_.y3[i]);
    apply(i, pre, binding);
  }
}

template <class T>
std::span<const T> LearningConnection<T>::row(std::size_t post) const {
  check_index(post, posts_, "row: post");
  return std::span<const T>(weights_).subspan(post * pres_, pres_);
}

template <class T>
void LearningConnection<T>::set_weights(std::vector<T> weights) {
  if (weights.size() != weights_.size()) throw std::invalid_argument("set_weights: size mismatch");
  if (limits_.weight) {
    for (T w : weights) {
      if constexpr (std::is_integral_v<T>) {
        if (w < limits_.weight->min_code() || w > limits_.weight->max_code()) {
          throw std::out_of_range("set_weights: weight outside its format range");
        }
      }
    }
  }
  weights_ = std::move(weights);
}

template <class T>
T LearningConnection<T>::saturate_weight(T w) {
  if constexpr (std::is_integral_v<T>) {
    if (limits_.weight) {
      const T lo = static_cast<T>(limits_.weight->min_code());
      const T hi = static_cast<T>(limits_.weight->max_code());
      if (w < lo || w > hi) {
        ++saturations_;
        return std::clamp(w, lo, hi);
      }
    }
  }
  return w;
}

template <class T>
T LearningConnection<T>::saturate_trace(T v) {
  if constexpr (std::is_integral_v<T>) {
    if (limits_.trace) {
      const T lo = static_cast<T>(limits_.trace->min_code());
      const T hi = static_cast<T>(limits_.trace->max_code());
      if (v < lo || v > hi) {
        ++saturations_;
        return std::clamp(v, lo, hi);
      }
    }
  }
  return v;
}

template <class T>
void LearningConnection<T>::check_trace_value(T v) const {
  if constexpr (std::is_integral_v<T>) {
    if (limits_.trace && (v < limits_.trace->min_code() || v > limits_.trace->max_code())) {
      throw std::out_of_range("trace value " + std::to_string(v) + " outside the unsigned trace range");
    }
  }
}

template class LearningConnection<double>;
template class LearningConnection<std::int64_t>;

}  // namespace ptx
