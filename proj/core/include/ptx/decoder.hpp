#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "ptx/kernels.hpp"
#include "ptx/model.hpp"
#include "ptx/plastic_attention.hpp"
#include "ptx/reference.hpp"

namespace ptx {

enum class AttentionImpl { Reference, Plastic };

/// Residual layer: h = x + attn(x); out = h + mlp(h).
class TransformerLayer {
 public:
  /// `weights` and `config` must outlive the layer.
  TransformerLayer(const LayerWeights& weights, const ModelConfig& config, const Kernels& kernels, AttentionImpl impl);

  Vec step(std::span<const double> x);

  std::variant<RefAttentionBlock, PlasticAttentionLayer>& attention() noexcept { return attn_; }
  const std::variant<RefAttentionBlock, PlasticAttentionLayer>& attention() const noexcept { return attn_; }

 private:
  std::variant<RefAttentionBlock, PlasticAttentionLayer> attn_;
  const MlpWeights* mlp_;
  Kernels kernels_;
  std::size_t tokens_ = 0;
};

/// Autoregressive pass through every decoder layer; owns the per-sequence
/// caches and shares the immutable model.
class DecoderSession {
 public:
  DecoderSession(std::shared_ptr<const Model> model, AttentionImpl impl, Kernels kernels);

  /// Feed one embedded token; returns the last layer's output.
  Vec step(std::span<const double> x);

  std::size_t tokens_seen() const noexcept { return tokens_; }
  const Model& model() const noexcept { return *model_; }
  const Kernels& kernels() const noexcept { return kernels_; }
  AttentionImpl impl() const noexcept { return impl_; }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  TransformerLayer& layer(std::size_t i) { return layers_.at(i); }
  const TransformerLayer& layer(std::size_t i) const { return layers_.at(i); }

 private:
  std::shared_ptr<const Model> model_;
  AttentionImpl impl_;
  Kernels kernels_;
  std::vector<TransformerLayer> layers_;
  std::size_t tokens_ = 0;
};

/// Kernels matching a precision and the model's quant config.
Kernels make_kernels(const ModelConfig& config, Precision precision);

/// Token-by-token run of a whole sequence; the autoregressive twin of forward_parallel.
std::vector<Vec> forward_autoregressive(std::shared_ptr<const Model> model, const std::vector<Vec>& inputs,
                                        AttentionImpl impl, const Kernels& kernels);

}  // namespace ptx
