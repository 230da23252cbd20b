#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ptx/kernels.hpp"
#include "ptx/quant.hpp"
#include "ptx/tensor.hpp"

namespace ptx {

struct ModelConfig {
  std::size_t layers = 4;
  std::size_t dim = 128;
  std::size_t heads = 1;
  /// Attention window W; slots are reused first-in first-out once full.
  std::size_t window = 6;
  std::size_t max_seq_len = 6;
  /// Flattened image size P and number of classes N of the few-shot task.
  std::size_t pixels = 16;
  std::size_t classes = 5;
  /// Scale scores by 1/sqrt(head_dim). Off: plain dot-product scores.
  bool scaled_attention = false;
  /// RMSNorm before the output head.
  bool final_norm = false;
  /// ReLU after the encoder's hidden layer, before its normalization.
  bool encoder_relu = true;
  double rms_eps = kDefaultRmsEps;
  QuantConfig quant{};

  /// Throws std::invalid_argument on inconsistent hyperparameters.
  void validate() const;

  std::size_t head_dim() const noexcept { return dim / heads; }
  std::size_t hidden_dim() const noexcept { return 4 * dim; }
  /// Pixels, N label channels and one query-marker channel.
  std::size_t token_width() const noexcept { return pixels + classes + 1; }

  bool operator==(const ModelConfig&) const = default;
};

/// Sequence length of an N-way K-shot episode: N*K support tokens and the query.
std::size_t episode_length(std::size_t ways, std::size_t shots) noexcept;

/// 4 layers, D = 128, 1 head; window and max length cover one episode.
ModelConfig tiny_config(std::size_t ways, std::size_t shots, std::size_t pixels);
/// 6 layers, D = 256, 8 heads.
ModelConfig small_config(std::size_t ways, std::size_t shots, std::size_t pixels);

struct AttentionWeights {
  Vec norm_gain;
  Mat wq, wk, wv, wo;
  Vec bo;
};

struct MlpWeights {
  Vec norm_gain;
  Mat w1;  // 4D x D
  Mat w2;  // D x 4D
  Vec b2;
};

struct LayerWeights {
  AttentionWeights attn;
  MlpWeights mlp;
};

struct EncoderWeights {
  Mat weight;  // D x token_width
  Vec bias;
};

struct OutputHead {
  Vec norm_gain;  // empty unless config.final_norm
  Mat weight;     // N x D
  Vec bias;
};

struct Model {
  ModelConfig config;
  EncoderWeights encoder;
  std::vector<LayerWeights> layers;
  OutputHead head;
  /// Per-tensor code formats; non-empty for quantized models.
  std::map<std::string, QuantSpec> tensor_formats;

  /// Throws ShapeError if any tensor disagrees with the config.
  void validate() const;
};

struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const double> values;
};

struct MutableTensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<double> values;
};

/// All tensors of a model in canonical order, named e.g. "layers.0.attn.wq".
std::vector<TensorView> tensors(const Model& model);
std::vector<MutableTensorView> tensors(Model& model);
/// Names and shapes a model with this config must carry, in canonical order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> expected_tensors(const ModelConfig& config);

/// Unit norm gains, everything else zero.
Model zero_model(const ModelConfig& config);
/// Uniform init with variance-preserving ranges; deterministic in seed.
Model random_model(const ModelConfig& config, std::uint64_t seed);

struct TensorQuantStats {
  std::string name;
  QuantSpec spec;
  std::size_t count = 0;
  std::size_t saturated = 0;
  /// Largest |dequantized - original| over non-saturated entries.
  double max_error = 0.0;
};

/// Snap every tensor onto a per-tensor power-of-two grid: matrices with
/// config.quant.matrix_bits, vectors with config.quant.vector_bits, exponent
/// the smallest covering max|x|. Records the formats in tensor_formats.
std::vector<TensorQuantStats> quantize_model(Model& model);

struct QkvProjection {
  Vec q, k, v;
};

/// Pre-norm and the bias-free q/k/v projections of one attention block.
QkvProjection project_qkv(const AttentionWeights& weights, std::span<const double> x, const Kernels& kernels);

}  // namespace ptx
