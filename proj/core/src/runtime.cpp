#include "ptx/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ptx/error.hpp"
#include "ptx/numerics.hpp"
#include "ptx/quant.hpp"
#include "ptx/random.hpp"

namespace ptx {

std::optional<ExecutionMode> parse_execution_mode(std::string_view text) {
  if (text == "float") return ExecutionMode::Float;
  if (text == "quant") return ExecutionMode::Quant;
  if (text == "plastic") return ExecutionMode::Plastic;
  if (text == "plastic-quant") return ExecutionMode::PlasticQuant;
  return std::nullopt;
}

std::string_view mode_name(ExecutionMode mode) {
  switch (mode) {
    case ExecutionMode::Float: return "float";
    case ExecutionMode::Quant: return "quant";
    case ExecutionMode::Plastic: return "plastic";
    case ExecutionMode::PlasticQuant: return "plastic-quant";
  }
  return "?";
}

AttentionImpl attention_impl(ExecutionMode mode) {
  return mode == ExecutionMode::Plastic || mode == ExecutionMode::PlasticQuant ? AttentionImpl::Plastic
                                                                                 : AttentionImpl::Reference;
}

Precision precision(ExecutionMode mode) {
  return mode == ExecutionMode::Quant || mode == ExecutionMode::PlasticQuant ? Precision::Quant : Precision::Float;
}

Vec embed_token(const Model& model, std::span<const double> input, const Kernels& kernels) {
  if (input.size() != model.config.token_width()) {
    throw ShapeError("embed_token: input width " + std::to_string(input.size()) + ", expected " +
                     std::to_string(model.config.token_width()));
  }
  Vec e = kernels.activation(add(vmm(model.encoder.weight, input), model.encoder.bias));
  if (model.config.encoder_relu) e = relu(e);
  const Vec unit(e.size(), 1.0);
  return kernels.norm(e, unit);
}

Vec head_scores(const Model& model, std::span<const double> h, const Kernels& kernels) {
  Vec x(h.begin(), h.end());
  if (model.config.final_norm) x = kernels.norm(x, model.head.norm_gain);
  return kernels.activation(add(vmm(model.head.weight, x), model.head.bias));
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("argmax: empty scores");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

namespace {

void check_fits(const ModelConfig& c, const Episode& ep) {
  if (ep.ways != c.classes) {
    throw std::invalid_argument("episode is " + std::to_string(ep.ways) + "-way, model expects " +
                                std::to_string(c.classes));
  }
  if (ep.query_image.size() != c.pixels) {
    throw std::invalid_argument("episode images have " + std::to_string(ep.query_image.size()) +
                                " pixels, model expects " + std::to_string(c.pixels));
  }
  if (ep.support.size() + 1 > c.max_seq_len) {
    throw std::invalid_argument("episode length " + std::to_string(ep.support.size() + 1) + " exceeds max_seq_len " +
                                std::to_string(c.max_seq_len));
  }
}

}  // namespace

EpisodeResult run_episode(std::shared_ptr<const Model> model, const Episode& episode, ExecutionMode mode) {
  if (!model) throw std::invalid_argument("run_episode: null model");
  check_fits(model->config, episode);
  const Kernels kernels = make_kernels(model->config, precision(mode));
  DecoderSession session(model, attention_impl(mode), kernels);
  Vec h;
  for (const auto& input : episode_inputs(episode)) h = session.step(embed_token(*model, input, kernels));
  EpisodeResult r;
  r.scores = head_scores(*model, h, kernels);
  r.predicted = argmax(r.scores);
  return r;
}

AccuracyInterval wilson_interval(std::size_t correct, std::size_t count, double z) {
  if (count == 0) throw std::invalid_argument("wilson_interval: count must be positive");
  if (correct > count) throw std::invalid_argument("wilson_interval: correct exceeds count");
  const double n = static_cast<double>(count);
  const double p = static_cast<double>(correct) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

// Runs body(i) for i in [0, count) on a pool; rethrows the first failure.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

EvalReport finish(EvalReport r) {
  r.count = r.labels.size();
  r.correct = 0;
  for (std::size_t i = 0; i < r.count; ++i) r.correct += r.predictions[i] == r.labels[i];
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.count);
  r.interval = wilson_interval(r.correct, r.count);
  return r;
}

void check_options(const EvalOptions& o) {
  if (o.episodes == 0) throw std::invalid_argument("evaluate: episode count must be positive");
}

}  // namespace

EvalReport evaluate(std::shared_ptr<const Model> model, const FewShotDataset& dataset, const EvalOptions& options,
                    ExecutionMode mode) {
  check_options(options);
  if (!model) throw std::invalid_argument("evaluate: null model");
  EvalReport r;
  r.predictions.resize(options.episodes);
  r.labels.resize(options.episodes);
  r.scores.resize(options.episodes);
  parallel_for(options.episodes, options.threads, [&](std::size_t i) {
    const Episode ep = sample_episode(dataset, options.ways, options.shots, derive_seed(options.seed, i));
    EpisodeResult res = run_episode(model, ep, mode);
    r.predictions[i] = res.predicted;
    r.labels[i] = ep.query_label;
    r.scores[i] = std::move(res.scores);
  });
  return finish(std::move(r));
}

EvalReport evaluate(const EpisodePredictor& predictor, const FewShotDataset& dataset, const EvalOptions& options) {
  check_options(options);
  EvalReport r;
  r.predictions.resize(options.episodes);
  r.labels.resize(options.episodes);
  parallel_for(options.episodes, options.threads, [&](std::size_t i) {
    const Episode ep = sample_episode(dataset, options.ways, options.shots, derive_seed(options.seed, i));
    r.predictions[i] = predictor(ep);
    r.labels[i] = ep.query_label;
  });
  return finish(std::move(r));
}

CalibrationStats calibrate(std::shared_ptr<const Model> model, const FewShotDataset& dataset,
                           const EvalOptions& options) {
  check_options(options);
  if (!model) throw std::invalid_argument("calibrate: null model");
  const Kernels kernels = Kernels::float_mode(model->config.rms_eps);
  CalibrationStats stats;
  auto max_abs = [](const Vec& v, double m) {
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  for (std::size_t i = 0; i < options.episodes; ++i) {
    const Episode ep = sample_episode(dataset, options.ways, options.shots, derive_seed(options.seed, i));
    check_fits(model->config, ep);
    DecoderSession session(model, AttentionImpl::Reference, kernels);
    for (const auto& input : episode_inputs(ep)) {
      const Vec e = embed_token(*model, input, kernels);
      stats.max_activation = max_abs(e, stats.max_activation);
      stats.max_activation = max_abs(session.step(e), stats.max_activation);
    }
    for (std::size_t l = 0; l < session.layer_count(); ++l) {
      const auto& block = std::get<RefAttentionBlock>(session.layer(l).attention());
      for (const auto& k : block.keys()) stats.max_key = max_abs(k, stats.max_key);
      for (const auto& v : block.values()) stats.max_value = max_abs(v, stats.max_value);
    }
    ++stats.episodes;
  }
  return stats;
}

void apply_calibration(QuantConfig& quant, const CalibrationStats& stats) {
  // Keys use even codes only, so the top code is one below the signed maximum.
  const double key_top = (std::ldexp(1.0, quant.keys.bits - 1) - 2) / (std::ldexp(1.0, quant.keys.bits - 1) - 1);
  quant.keys.exponent = covering_exponent(stats.max_key / key_top, quant.keys.bits, quant.keys.is_signed);
  quant.values.exponent = covering_exponent(stats.max_value, quant.values.bits, quant.values.is_signed);
  quant.validate();
}

namespace {

template <class T>
void append_head(Container& c, const std::string& prefix, const PlasticAttentionHead<T>& head, const QuantConfig* q) {
  const auto& keys = head.keys();
  const auto& values = head.values();
  auto widen = [](std::span<const T> v, int exponent) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::ldexp(static_cast<double>(v[i]), exponent);
    return out;
  };
  const int ke = q ? q->keys.exponent : 0;
  const int ve = q ? q->values.exponent : 0;
  // Integer traces hold u = k/2 + 64; report the decoded key components.
  Vec x1(keys.traces().x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i) {
    const auto u = keys.traces().x1[i];
    x1[i] = q ? std::ldexp(static_cast<double>(decode_signed_trace(static_cast<std::int64_t>(u))), ke)
              : static_cast<double>(u);
  }
  c.tensors.push_back({prefix + ".keys", {keys.posts(), keys.pres()}, ElementType::Float32, 0, widen(keys.weights(), ke)});
  c.tensors.push_back({prefix + ".values", {values.posts(), values.pres()}, ElementType::Float32, 0,
                       widen(values.weights(), ve)});
  c.tensors.push_back({prefix + ".key_trace", {x1.size()}, ElementType::Float32, 0, std::move(x1)});
}

}  // namespace

Container dump_engine_state(const DecoderSession& session) {
  if (session.impl() != AttentionImpl::Plastic) throw std::invalid_argument("dump_engine_state: needs a plastic session");
  Container c;
  c.kind = "engine-state";
  c.config = session.model().config;
  const QuantConfig* q = session.kernels().quantized() ? &session.kernels().quant() : nullptr;
  std::size_t last_slot = 0;
  for (std::size_t l = 0; l < session.layer_count(); ++l) {
    const auto& layer = std::get<PlasticAttentionLayer>(session.layer(l).attention());
    for (std::size_t h = 0; h < layer.head_count(); ++h) {
      const std::string prefix = "layers." + std::to_string(l) + ".heads." + std::to_string(h);
      if (q) {
        const auto& head = layer.integer_head(h);
        append_head(c, prefix, head, q);
        if (head.scheduler().tokens_seen() > 0) last_slot = head.scheduler().slot_of(head.scheduler().tokens_seen() - 1);
      } else {
        const auto& head = layer.float_head(h);
        append_head(c, prefix, head, q);
        if (head.scheduler().tokens_seen() > 0) last_slot = head.scheduler().slot_of(head.scheduler().tokens_seen() - 1);
      }
    }
  }
  c.meta = "{\"tokens_seen\":" + std::to_string(session.tokens_seen()) +
           (session.tokens_seen() > 0 ? ",\"last_slot\":" + std::to_string(last_slot) : std::string()) +
           ",\"integer\":" + (q ? "true" : "false") + "}";
  return c;
}

}  // namespace ptx
