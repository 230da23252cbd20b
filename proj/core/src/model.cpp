#include "ptx/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ptx/error.hpp"
#include "ptx/numerics.hpp"
#include "ptx/random.hpp"

namespace ptx {

void ModelConfig::validate() const {
  if (layers == 0) throw std::invalid_argument("config: layers must be >= 1");
  if (dim == 0 || heads == 0) throw std::invalid_argument("config: dim and heads must be >= 1");
  if (dim % heads != 0) throw std::invalid_argument("config: dim must be divisible by heads");
  if (window == 0) throw std::invalid_argument("config: window must be >= 1");
  if (max_seq_len == 0) throw std::invalid_argument("config: max_seq_len must be >= 1");
  if (pixels == 0 || classes < 2) throw std::invalid_argument("config: need pixels >= 1 and classes >= 2");
  if (!(rms_eps > 0.0)) throw std::invalid_argument("config: rms_eps must be positive");
  quant.validate();
}

std::size_t episode_length(std::size_t ways, std::size_t shots) noexcept { return ways * shots + 1; }

ModelConfig tiny_config(std::size_t ways, std::size_t shots, std::size_t pixels) {
  ModelConfig c;
  c.layers = 4;
  c.dim = 128;
  c.heads = 1;
  c.classes = ways;
  c.pixels = pixels;
  c.window = c.max_seq_len = episode_length(ways, shots);
  return c;
}

ModelConfig small_config(std::size_t ways, std::size_t shots, std::size_t pixels) {
  ModelConfig c = tiny_config(ways, shots, pixels);
  c.layers = 6;
  c.dim = 256;
  c.heads = 8;
  return c;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> expected_tensors(const ModelConfig& c) {
  const std::size_t d = c.dim;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  out.push_back({"encoder.weight", {d, c.token_width()}});
  out.push_back({"encoder.bias", {d}});
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    out.push_back({p + "attn.norm", {d}});
    out.push_back({p + "attn.wq", {d, d}});
    out.push_back({p + "attn.wk", {d, d}});
    out.push_back({p + "attn.wv", {d, d}});
    out.push_back({p + "attn.wo", {d, d}});
    out.push_back({p + "attn.bo", {d}});
    out.push_back({p + "mlp.norm", {d}});
    out.push_back({p + "mlp.w1", {c.hidden_dim(), d}});
    out.push_back({p + "mlp.w2", {d, c.hidden_dim()}});
    out.push_back({p + "mlp.b2", {d}});
  }
  if (c.final_norm) out.push_back({"head.norm", {d}});
  out.push_back({"head.weight", {c.classes, d}});
  out.push_back({"head.bias", {c.classes}});
  return out;
}

namespace {

template <class ModelT, class View, class Span>
std::vector<View> collect(ModelT& m) {
  std::vector<View> out;
  auto vec = [&](std::string name, auto& v) { out.push_back(View{std::move(name), {v.size()}, Span(v)}); };
  auto mat = [&](std::string name, auto& mm) { out.push_back(View{std::move(name), {mm.rows(), mm.cols()}, mm.values()}); };
  mat("encoder.weight", m.encoder.weight);
  vec("encoder.bias", m.encoder.bias);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    auto& layer = m.layers[l];
    vec(p + "attn.norm", layer.attn.norm_gain);
    mat(p + "attn.wq", layer.attn.wq);
    mat(p + "attn.wk", layer.attn.wk);
    mat(p + "attn.wv", layer.attn.wv);
    mat(p + "attn.wo", layer.attn.wo);
    vec(p + "attn.bo", layer.attn.bo);
    vec(p + "mlp.norm", layer.mlp.norm_gain);
    mat(p + "mlp.w1", layer.mlp.w1);
    mat(p + "mlp.w2", layer.mlp.w2);
    vec(p + "mlp.b2", layer.mlp.b2);
  }
  if (m.config.final_norm) vec("head.norm", m.head.norm_gain);
  mat("head.weight", m.head.weight);
  vec("head.bias", m.head.bias);
  return out;
}

}  // namespace

std::vector<TensorView> tensors(const Model& model) {
  return collect<const Model, TensorView, std::span<const double>>(model);
}

std::vector<MutableTensorView> tensors(Model& model) { return collect<Model, MutableTensorView, std::span<double>>(model); }

void Model::validate() const {
  config.validate();
  if (layers.size() != config.layers) {
    throw ShapeError("model: " + std::to_string(layers.size()) + " layers, config says " + std::to_string(config.layers));
  }
  const auto expected = expected_tensors(config);
  const auto actual = tensors(*this);
  if (expected.size() != actual.size()) throw ShapeError("model: tensor count mismatch");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    std::size_t n = 1;
    for (auto s : expected[i].second) n *= s;
    if (actual[i].shape != expected[i].second || actual[i].values.size() != n) {
      throw ShapeError("model: tensor " + expected[i].first + " has the wrong shape");
    }
    require_finite(actual[i].values, expected[i].first.c_str());
  }
}

Model zero_model(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.dim;
  Model m;
  m.config = c;
  m.encoder = {Mat(d, c.token_width()), Vec(d, 0.0)};
  m.layers.resize(c.layers);
  for (auto& layer : m.layers) {
    layer.attn = {Vec(d, 1.0), Mat(d, d), Mat(d, d), Mat(d, d), Mat(d, d), Vec(d, 0.0)};
    layer.mlp = {Vec(d, 1.0), Mat(c.hidden_dim(), d), Mat(d, c.hidden_dim()), Vec(d, 0.0)};
  }
  m.head = {c.final_norm ? Vec(d, 1.0) : Vec{}, Mat(c.classes, d), Vec(c.classes, 0.0)};
  return m;
}

Model random_model(const ModelConfig& c, std::uint64_t seed) {
  Model m = zero_model(c);
  Rng rng(seed);
  for (auto& t : tensors(m)) {
    const bool is_gain = t.name.ends_with(".norm");
    if (t.shape.size() == 2) {
      const double bound = std::sqrt(3.0 / static_cast<double>(t.shape[1]));
      for (double& v : t.values) v = rng.uniform(-bound, bound);
    } else if (is_gain) {
      for (double& v : t.values) v = rng.uniform(0.9, 1.1);
    } else {
      for (double& v : t.values) v = rng.uniform(-0.1, 0.1);
    }
  }
  return m;
}

std::vector<TensorQuantStats> quantize_model(Model& model) {
  model.validate();
  const auto& q = model.config.quant;
  std::vector<TensorQuantStats> stats;
  model.tensor_formats.clear();
  for (auto& t : tensors(model)) {
    const int bits = t.shape.size() == 2 ? q.matrix_bits : q.vector_bits;
    double max_abs = 0.0;
    for (double v : t.values) max_abs = std::max(max_abs, std::abs(v));
    const QuantSpec spec{bits, true, covering_exponent(max_abs, bits, true)};
    TensorQuantStats s{t.name, spec, t.values.size(), 0, 0.0};
    for (double& v : t.values) {
      bool sat = false;
      const auto code = quantize_value(v, spec, &sat);
      const double dq = std::ldexp(static_cast<double>(code), spec.exponent);
      if (sat) {
        ++s.saturated;
      } else {
        s.max_error = std::max(s.max_error, std::abs(dq - v));
      }
      v = dq;
    }
    model.tensor_formats[t.name] = spec;
    stats.push_back(s);
  }
  return stats;
}

QkvProjection project_qkv(const AttentionWeights& w, std::span<const double> x, const Kernels& kernels) {
  const Vec xn = kernels.norm(x, w.norm_gain);
  return {kernels.activation(vmm(w.wq, xn)), kernels.key(vmm(w.wk, xn)), kernels.value(vmm(w.wv, xn))};
}

}  // namespace ptx
