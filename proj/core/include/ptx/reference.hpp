#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ptx/kernels.hpp"
#include "ptx/model.hpp"

namespace ptx {

/// Dense self-attention with an explicit tensor KV-cache. Attends over the
/// last min(t + 1, config.window) cached tokens.
class RefAttentionBlock {
 public:
  /// `weights` must outlive the block.
  RefAttentionBlock(const AttentionWeights& weights, const ModelConfig& config, Kernels kernels);

  Vec step(std::span<const double> x);

  std::size_t tokens_seen() const noexcept { return keys_.size(); }
  /// One row per processed token (k_t, v_t after quantization in Quant mode).
  const std::vector<Vec>& keys() const noexcept { return keys_; }
  const std::vector<Vec>& values() const noexcept { return values_; }
  /// Attention probabilities of the last step, per head.
  const std::vector<Vec>& last_probs() const noexcept { return last_probs_; }

 private:
  const AttentionWeights* weights_;
  ModelConfig config_;
  Kernels kernels_;
  std::vector<Vec> keys_;
  std::vector<Vec> values_;
  std::vector<Vec> last_probs_;
};

/// z = W2 relu(W1 rmsnorm(x)) + b2
Vec mlp_step(const MlpWeights& block, std::span<const double> x, const Kernels& kernels);

/// Whole-sequence forward pass through the decoder layers with a T x T
/// causal (and window) mask. Returns the last layer's output per token.
/// Throws std::length_error if inputs exceed config.max_seq_len.
std::vector<Vec> forward_parallel(const Model& model, const std::vector<Vec>& inputs, const Kernels& kernels);

}  // namespace ptx
