#include "ptx/decoder.hpp"

#include <stdexcept>

#include "ptx/numerics.hpp"

namespace ptx {

namespace {

std::variant<RefAttentionBlock, PlasticAttentionLayer> make_attention(const LayerWeights& w, const ModelConfig& c,
                                                                      const Kernels& k, AttentionImpl impl) {
  if (impl == AttentionImpl::Plastic) return PlasticAttentionLayer(w.attn, c, k);
  return RefAttentionBlock(w.attn, c, k);
}

}  // namespace

TransformerLayer::TransformerLayer(const LayerWeights& weights, const ModelConfig& config, const Kernels& kernels,
                                   AttentionImpl impl)
    : attn_(make_attention(weights, config, kernels, impl)), mlp_(&weights.mlp), kernels_(kernels) {}

Vec TransformerLayer::step(std::span<const double> x) {
  const Vec a = std::visit(
      [&](auto& block) -> Vec {
        if constexpr (std::is_same_v<std::decay_t<decltype(block)>, PlasticAttentionLayer>) {
          return block.attend_step(x, tokens_);
        } else {
          return block.step(x);
        }
      },
      attn_);
  ++tokens_;
  const Vec h = kernels_.activation(add(x, a));
  return kernels_.activation(add(h, mlp_step(*mlp_, h, kernels_)));
}

DecoderSession::DecoderSession(std::shared_ptr<const Model> model, AttentionImpl impl, Kernels kernels)
    : model_(std::move(model)), impl_(impl), kernels_(kernels) {
  if (!model_) throw std::invalid_argument("DecoderSession: null model");
  model_->validate();
  layers_.reserve(model_->layers.size());
  for (const auto& lw : model_->layers) layers_.emplace_back(lw, model_->config, kernels_, impl_);
}

Vec DecoderSession::step(std::span<const double> x) {
  Vec h(x.begin(), x.end());
  for (auto& layer : layers_) h = layer.step(h);
  ++tokens_;
  return h;
}

Kernels make_kernels(const ModelConfig& config, Precision precision) {
  return Kernels(precision, config.quant, config.rms_eps);
}

std::vector<Vec> forward_autoregressive(std::shared_ptr<const Model> model, const std::vector<Vec>& inputs,
                                        AttentionImpl impl, const Kernels& kernels) {
  DecoderSession session(std::move(model), impl, kernels);
  std::vector<Vec> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(session.step(x));
  return out;
}

}  // namespace ptx
