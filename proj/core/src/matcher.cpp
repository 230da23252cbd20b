#include "ptx/matcher.hpp"

#include <algorithm>
#include <stdexcept>

namespace ptx {

namespace {

constexpr double kSelfPenalty = 10.0;
constexpr double kValueScale = 0.25;
constexpr double kAnswerScale = 2.0;

}  // namespace

ModelConfig matcher_config(std::size_t ways, std::size_t shots, std::size_t pixels) {
  ModelConfig c = tiny_config(ways, shots, pixels);
  const std::size_t need = MatcherLayout{pixels, ways}.width();
  c.dim = std::max(c.dim, (need + 7) / 8 * 8);
  c.encoder_relu = false;  // the matching features are signed
  c.validate();
  return c;
}

Model matcher_model(const ModelConfig& config) {
  config.validate();
  const MatcherLayout lay{config.pixels, config.classes};
  if (config.heads != 1) throw std::invalid_argument("matcher_model: needs a single head");
  if (config.encoder_relu) throw std::invalid_argument("matcher_model: needs encoder_relu off");
  if (config.dim < lay.width()) {
    throw std::invalid_argument("matcher_model: dim " + std::to_string(config.dim) + " < layout width " +
                                std::to_string(lay.width()));
  }
  if (config.layers == 0) throw std::invalid_argument("matcher_model: needs a layer");
  const std::size_t P = lay.pixels, N = lay.classes;

  Model m = zero_model(config);
  // Input: pixels, label one-hot, query marker.
  for (std::size_t i = 0; i < P; ++i) {
    m.encoder.weight(i, i) = 1.0;
    m.encoder.bias[i] = -0.5;
  }
  for (std::size_t n = 0; n < N; ++n) m.encoder.weight(lay.label_begin() + n, P + n) = 1.0;
  m.encoder.weight(lay.marker(), P + N) = 1.0;
  m.encoder.bias[lay.constant()] = 1.0;

  AttentionWeights& a = m.layers[0].attn;
  for (std::size_t i = 0; i < P; ++i) {
    a.wq(i, i) = 1.0;
    a.wk(i, i) = 1.0;
  }
  a.wq(P, lay.constant()) = kSelfPenalty;
  a.wk(P, lay.marker()) = -1.0;
  for (std::size_t n = 0; n < N; ++n) {
    a.wv(n, lay.label_begin() + n) = kValueScale;
    a.wo(lay.answer_begin() + n, n) = kAnswerScale;
    m.head.weight(n, lay.answer_begin() + n) = 1.0;
  }
  m.validate();
  return m;
}

}  // namespace ptx
