// ptx: evaluation, equivalence checking, quantization, inspection and
// benchmarking for plastic-attention transformer checkpoints.
//
// Every command prints a JSON run manifest on stdout (or to --out) and a short
// human summary on stderr. Exit codes: 0 success, 1 check failed, 2 usage or
// configuration error.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ptx/checkpoint.hpp"
#include "ptx/decoder.hpp"
#include "ptx/matcher.hpp"
#include "ptx/omniglot.hpp"
#include "ptx/random.hpp"
#include "ptx/reference.hpp"
#include "ptx/runtime.hpp"

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

// Configuration problems detected after argument parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct DatasetOptions {
  std::string kind = "synthetic";
  std::string root;
  std::size_t classes = 64;
  std::size_t samples = 20;
  double noise = 0.1;
  std::uint64_t seed = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--dataset", kind, "synthetic | omniglot")->check(CLI::IsMember({"synthetic", "omniglot"}));
    cmd.add_option("--data-root", root, "Omniglot root (alphabet/character/*.png)")->envname("PTX_OMNIGLOT_ROOT");
    cmd.add_option("--synthetic-classes", classes, "classes of the synthetic dataset")->check(CLI::PositiveNumber);
    cmd.add_option("--synthetic-samples", samples, "samples per synthetic class")->check(CLI::PositiveNumber);
    cmd.add_option("--synthetic-noise", noise, "pixel noise of the synthetic dataset")->check(CLI::NonNegativeNumber);
    cmd.add_option("--data-seed", seed, "seed of the synthetic prototypes");
  }

  std::unique_ptr<ptx::FewShotDataset> open(std::size_t pixels) const {
    if (kind == "synthetic") return std::make_unique<ptx::SyntheticDataset>(classes, samples, pixels, noise, seed);
    if (root.empty()) throw UsageError("--dataset omniglot needs --data-root or PTX_OMNIGLOT_ROOT");
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(pixels))));
    if (side * side != pixels) throw UsageError("model pixel count " + std::to_string(pixels) + " is not a square image");
    return std::make_unique<ptx::OmniglotDataset>(root, side);
  }

  json describe() const {
    if (kind == "omniglot") return {{"kind", kind}, {"root", root}};
    return {{"kind", kind}, {"classes", classes}, {"samples", samples}, {"noise", noise}, {"seed", seed}};
  }
};

ptx::LoadedModel open_checkpoint(const std::string& path) {
  try {
    return ptx::load_model(path);
  } catch (const std::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

json manifest(const std::string& command, const ptx::LoadedModel* ckpt) {
  json m = {{"command", command}};
  m["config_digest"] = ckpt ? ckpt->config_digest : "";
  m["checkpoint_digest"] = ckpt ? ckpt->blob_digest : "";
  return m;
}

void emit(const json& m, const std::string& out_path) {
  const std::string text = m.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw UsageError("cannot write " + out_path);
  out << text;
}

ptx::ExecutionMode mode_from(const std::string& text) {
  const auto mode = ptx::parse_execution_mode(text);
  if (!mode) throw UsageError("unknown mode '" + text + "'");
  return *mode;
}

json report_json(const ptx::EvalReport& r) {
  return {{"accuracy", r.accuracy},
          {"ci95", {r.interval.low, r.interval.high}},
          {"correct", r.correct},
          {"count", r.count}};
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::size_t ways = 5, shots = 1, episodes = 256, threads = 0;
  std::uint64_t seed = 0;
  std::string mode = "float";
  std::string compare;
  std::optional<double> min_agreement;
  DatasetOptions data;
};

int cmd_eval(const EvalArgs& a, const std::string& out) {
  const auto ckpt = open_checkpoint(a.checkpoint);
  const auto model = std::make_shared<const ptx::Model>(ckpt.model);
  const auto mode = mode_from(a.mode);
  const auto dataset = a.data.open(model->config.pixels);
  if (a.ways != model->config.classes) {
    throw UsageError("--n " + std::to_string(a.ways) + " but the checkpoint is " +
                     std::to_string(model->config.classes) + "-way");
  }
  if (ptx::episode_length(a.ways, a.shots) > model->config.max_seq_len) {
    throw UsageError("episode length exceeds the checkpoint's max_seq_len " + std::to_string(model->config.max_seq_len));
  }
  const ptx::EvalOptions opts{a.ways, a.shots, a.episodes, a.seed, a.threads};

  const auto start = Clock::now();
  ptx::EvalReport report;
  try {
    report = ptx::evaluate(model, *dataset, opts, mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const double wall = seconds_since(start);

  json m = manifest("eval", &ckpt);
  m["seed"] = a.seed;
  m["episodes"] = a.episodes;
  m["timing"] = {{"wall_seconds", wall}, {"ms_per_episode", 1e3 * wall / static_cast<double>(a.episodes)}};
  json results = report_json(report);
  results["mode"] = a.mode;
  results["n"] = a.ways;
  results["k"] = a.shots;
  results["dataset"] = a.data.describe();
  std::cerr << a.mode << ": accuracy " << report.accuracy << " (95% CI " << report.interval.low << " - "
            << report.interval.high << ", " << report.correct << "/" << report.count << ")\n";

  int code = kExitOk;
  if (!a.compare.empty()) {
    const auto other_mode = mode_from(a.compare);
    const auto other = ptx::evaluate(model, *dataset, opts, other_mode);
    std::size_t agree = 0;
    double max_diff = 0.0;
    for (std::size_t i = 0; i < report.count; ++i) {
      agree += report.predictions[i] == other.predictions[i];
      for (std::size_t c = 0; c < report.scores[i].size(); ++c) {
        max_diff = std::max(max_diff, std::abs(report.scores[i][c] - other.scores[i][c]));
      }
    }
    const double agreement = static_cast<double>(agree) / static_cast<double>(report.count);
    json cmp = report_json(other);
    cmp["mode"] = a.compare;
    cmp["agreement"] = agreement;
    cmp["max_score_diff"] = max_diff;
    results["compare"] = cmp;
    std::cerr << a.compare << ": accuracy " << other.accuracy << ", prediction agreement " << agreement
              << ", max score diff " << max_diff << "\n";
    if (a.min_agreement && agreement < *a.min_agreement) code = kExitCheckFailed;
  }
  m["results"] = results;
  emit(m, out);
  return code;
}

// ---------------------------------------------------------------------------

struct EquivArgs {
  std::size_t d = 16, h = 1, t = 8, w = 0, layers = 1;
  std::uint64_t seed = 0;
  std::string precision = "float";
  double tolerance = 1e-5;
};

int cmd_equiv(const EquivArgs& a, const std::string& out) {
  ptx::ModelConfig c;
  c.layers = a.layers;
  c.dim = a.d;
  c.heads = a.h;
  c.window = a.w == 0 ? a.t : a.w;
  c.max_seq_len = a.t;
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const auto prec = a.precision == "quant" ? ptx::Precision::Quant : ptx::Precision::Float;
  const auto model = std::make_shared<const ptx::Model>(ptx::random_model(c, a.seed));
  ptx::Rng rng(ptx::derive_seed(a.seed, 1));
  std::vector<ptx::Vec> inputs(a.t, ptx::Vec(a.d));
  for (auto& x : inputs) {
    for (auto& v : x) v = rng.normal();
  }
  const auto kernels = ptx::make_kernels(c, prec);

  const auto start = Clock::now();
  const auto plastic = ptx::forward_autoregressive(model, inputs, ptx::AttentionImpl::Plastic, kernels);
  const auto reference = ptx::forward_autoregressive(model, inputs, ptx::AttentionImpl::Reference, kernels);
  const auto parallel = ptx::forward_parallel(*model, inputs, kernels);
  const double wall = seconds_since(start);

  double max_plastic = 0.0, max_parallel = 0.0;
  json per_token = json::array();
  for (std::size_t t = 0; t < a.t; ++t) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.d; ++i) {
      d = std::max(d, std::abs(plastic[t][i] - reference[t][i]));
      max_parallel = std::max(max_parallel, std::abs(parallel[t][i] - reference[t][i]));
    }
    max_plastic = std::max(max_plastic, d);
    per_token.push_back(d);
  }
  const bool pass = max_plastic < a.tolerance && max_parallel < a.tolerance;

  json m = manifest("equiv", nullptr);
  m["config_digest"] = ptx::config_digest(c);
  m["seed"] = a.seed;
  m["episodes"] = 0;
  m["timing"] = {{"wall_seconds", wall}};
  m["results"] = {{"d", a.d},
                  {"h", a.h},
                  {"t", a.t},
                  {"w", c.window},
                  {"layers", a.layers},
                  {"precision", a.precision},
                  {"max_abs_diff", max_plastic},
                  {"max_abs_diff_parallel", max_parallel},
                  {"per_token_max_abs_diff", per_token},
                  {"tolerance", a.tolerance},
                  {"pass", pass}};
  std::cerr << "plastic vs reference max |diff| " << max_plastic << ", parallel vs autoregressive " << max_parallel
            << (pass ? " PASS" : " FAIL") << "\n";
  emit(m, out);
  return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

struct QuantizeArgs {
  std::string input, output;
  std::optional<int> matrix_bits, vector_bits;
  std::size_t calibrate = 0, ways = 0, shots = 1;
  std::uint64_t seed = 0;
  DatasetOptions data;
};

int cmd_quantize(const QuantizeArgs& a, const std::string& out) {
  const auto ckpt = open_checkpoint(a.input);
  ptx::Model model = ckpt.model;
  if (a.matrix_bits) model.config.quant.matrix_bits = *a.matrix_bits;
  if (a.vector_bits) model.config.quant.vector_bits = *a.vector_bits;
  if (model.config.quant.matrix_bits > 16 || model.config.quant.vector_bits > 16) {
    throw UsageError("stored formats are at most 16 bits");
  }

  json calibration = nullptr;
  const auto start = Clock::now();
  if (a.calibrate > 0) {
    const auto dataset = a.data.open(model.config.pixels);
    const std::size_t ways = a.ways == 0 ? model.config.classes : a.ways;
    const auto stats = ptx::calibrate(std::make_shared<const ptx::Model>(model), *dataset,
                                      {ways, a.shots, a.calibrate, a.seed, 1});
    ptx::apply_calibration(model.config.quant, stats);
    calibration = {{"episodes", stats.episodes},
                   {"max_key", stats.max_key},
                   {"max_value", stats.max_value},
                   {"max_activation", stats.max_activation},
                   {"keys_exponent", model.config.quant.keys.exponent},
                   {"values_exponent", model.config.quant.values.exponent}};
  }
  try {
    model.config.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const auto stats = ptx::quantize_model(model);
  const auto bytes = ptx::serialize_model(model);
  ptx::write_file(a.output, bytes);
  const auto written = ptx::deserialize_model(bytes);
  const double wall = seconds_since(start);

  json tensors = json::array();
  std::size_t saturated = 0, total = 0;
  bool within = true;
  for (const auto& s : stats) {
    const double bound = s.spec.scale() / 2;
    within = within && s.max_error <= bound;
    saturated += s.saturated;
    total += s.count;
    tensors.push_back({{"name", s.name},
                       {"bits", s.spec.bits},
                       {"exponent", s.spec.exponent},
                       {"count", s.count},
                       {"saturated", s.saturated},
                       {"max_error", s.max_error},
                       {"error_bound", bound}});
  }
  json m = manifest("quantize", &written);
  m["source_checkpoint_digest"] = ckpt.blob_digest;
  m["seed"] = a.seed;
  m["episodes"] = a.calibrate;
  m["timing"] = {{"wall_seconds", wall}};
  m["results"] = {{"output", a.output},
                  {"tensors", tensors},
                  {"saturated", saturated},
                  {"count", total},
                  {"errors_within_bound", within},
                  {"calibration", calibration}};
  std::cerr << "quantized " << stats.size() << " tensors, " << saturated << "/" << total << " saturated, errors "
            << (within ? "within" : "OUTSIDE") << " scale/2\n";
  emit(m, out);
  return within ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

struct InspectArgs {
  std::string checkpoint;
  std::size_t tokens = 0, shots = 0;
  std::uint64_t seed = 0;
  std::string precision = "float";
  std::string dump;
  DatasetOptions data;
};

int cmd_inspect(const InspectArgs& a, const std::string& out) {
  const auto ckpt = open_checkpoint(a.checkpoint);
  const auto model = std::make_shared<const ptx::Model>(ckpt.model);
  const auto& c = model->config;

  json manifest_json = json::array();
  for (const auto& t : ckpt.manifest) {
    manifest_json.push_back({{"name", t.name},
                             {"shape", t.shape},
                             {"dtype", ptx::element_type_name(t.dtype)},
                             {"scale_exp", t.scale_exponent}});
  }

  const auto prec = a.precision == "quant" ? ptx::Precision::Quant : ptx::Precision::Float;
  const auto kernels = ptx::make_kernels(c, prec);
  ptx::DecoderSession session(model, ptx::AttentionImpl::Plastic, kernels);
  bool all_match = true;
  json layers = json::array();
  if (a.tokens > 0) {
    const std::size_t shots = a.shots == 0 ? std::max<std::size_t>(1, (c.max_seq_len - 1) / c.classes) : a.shots;
    const auto dataset = a.data.open(c.pixels);
    const auto inputs = ptx::episode_inputs(ptx::sample_episode(*dataset, c.classes, shots, a.seed));
    if (a.tokens > inputs.size()) {
      throw UsageError("--tokens " + std::to_string(a.tokens) + " exceeds the episode length " +
                       std::to_string(inputs.size()));
    }
    for (std::size_t t = 0; t < a.tokens; ++t) session.step(ptx::embed_token(*model, inputs[t], kernels));
  }
  const double key_scale = kernels.quantized() ? c.quant.keys.scale() : 1.0;
  const double value_scale = kernels.quantized() ? c.quant.values.scale() : 1.0;
  for (std::size_t l = 0; l < session.layer_count(); ++l) {
    const auto& layer = std::get<ptx::PlasticAttentionLayer>(session.layer(l).attention());
    json heads = json::array();
    for (std::size_t h = 0; h < layer.head_count(); ++h) {
      auto describe = [&](const auto& head) {
        const auto& sched = head.scheduler();
        json j = {{"filled_slots", sched.filled()}, {"empty", sched.filled() == 0}};
        if (sched.tokens_seen() == 0) return j;
        const std::size_t slot = sched.slot_of(sched.tokens_seen() - 1);
        const std::size_t dh = c.head_dim();
        double key_diff = 0.0, value_diff = 0.0;
        for (std::size_t i = 0; i < dh; ++i) {
          const double k = static_cast<double>(head.keys().weight(slot, i)) * key_scale;
          const double v = static_cast<double>(head.values().weight(i, slot)) * value_scale;
          key_diff = std::max(key_diff, std::abs(k - layer.last_step().qkv.k[h * dh + i]));
          value_diff = std::max(value_diff, std::abs(v - layer.last_step().qkv.v[h * dh + i]));
        }
        const bool match = key_diff == 0.0 && value_diff == 0.0;
        all_match = all_match && match;
        j["current_slot"] = slot;
        j["slot_mask"] = head.mask();
        j["keys_row_equals_k"] = key_diff == 0.0;
        j["values_column_equals_v"] = value_diff == 0.0;
        j["max_key_diff"] = key_diff;
        j["max_value_diff"] = value_diff;
        j["last_probs"] = layer.last_step().probs.at(h);
        return j;
      };
      heads.push_back(kernels.quantized() ? describe(layer.integer_head(h)) : describe(layer.float_head(h)));
    }
    layers.push_back({{"layer", l}, {"heads", heads}});
  }
  if (!a.dump.empty()) ptx::write_file(a.dump, ptx::write_container(ptx::dump_engine_state(session)));

  json m = manifest("inspect", &ckpt);
  m["seed"] = a.seed;
  m["episodes"] = a.tokens > 0 ? 1 : 0;
  m["timing"] = json::object();
  m["results"] = {{"config", json::parse(ptx::config_to_json(c))},
                  {"manifest", manifest_json},
                  {"precision", a.precision},
                  {"tokens", a.tokens},
                  {"cache_empty", a.tokens == 0},
                  {"cache_matches_last_token", all_match},
                  {"layers", layers}};
  std::cerr << ckpt.manifest.size() << " tensors, " << a.tokens << " tokens fed, cache "
            << (a.tokens == 0 ? "empty" : (all_match ? "consistent" : "INCONSISTENT")) << "\n";
  emit(m, out);
  return all_match ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::size_t> dims{64}, lengths{32, 64, 128}, windows{8};
  std::size_t reps = 3;
  std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& a, const std::string& out) {
  json rows = json::array();
  const auto start = Clock::now();
  for (std::size_t d : a.dims) {
    for (std::size_t t : a.lengths) {
      for (std::size_t w : a.windows) {
        ptx::ModelConfig c;
        c.layers = 1;
        c.dim = d;
        c.heads = 1;
        c.window = w;
        c.max_seq_len = t;
        try {
          c.validate();
        } catch (const std::exception& e) {
          throw UsageError(e.what());
        }
        const auto model = std::make_shared<const ptx::Model>(ptx::random_model(c, a.seed));
        ptx::Rng rng(a.seed);
        std::vector<ptx::Vec> inputs(t, ptx::Vec(d));
        for (auto& x : inputs) {
          for (auto& v : x) v = rng.normal();
        }
        const auto kernels = ptx::Kernels::float_mode(c.rms_eps);
        json row = {{"d", d}, {"t", t}, {"w", w}};
        for (auto impl : {ptx::AttentionImpl::Reference, ptx::AttentionImpl::Plastic}) {
          double best = 1e300;
          for (std::size_t r = 0; r < a.reps; ++r) {
            ptx::DecoderSession session(model, impl, kernels);
            const auto t0 = Clock::now();
            for (const auto& x : inputs) session.step(x);
            best = std::min(best, seconds_since(t0));
          }
          row[impl == ptx::AttentionImpl::Plastic ? "plastic_us_per_token" : "reference_us_per_token"] =
              1e6 * best / static_cast<double>(t);
        }
        std::cerr << "d=" << d << " t=" << t << " w=" << w << ": reference " << row["reference_us_per_token"]
                  << " us/token, plastic " << row["plastic_us_per_token"] << " us/token\n";
        rows.push_back(row);
      }
    }
  }
  json m = manifest("bench", nullptr);
  m["seed"] = a.seed;
  m["episodes"] = 0;
  m["timing"] = {{"wall_seconds", seconds_since(start)}, {"rows", rows}};
  m["results"] = {{"reps", a.reps}, {"note", "latencies are in timing.rows"}};
  emit(m, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct InitArgs {
  std::string output;
  std::string kind = "random", preset = "tiny";
  std::size_t ways = 5, shots = 1, pixels = 16;
  std::uint64_t seed = 0;
};

int cmd_init(const InitArgs& a, const std::string& out) {
  ptx::Model model;
  try {
    if (a.kind == "matcher") {
      model = ptx::matcher_model(ptx::matcher_config(a.ways, a.shots, a.pixels));
    } else {
      const auto c = a.preset == "small" ? ptx::small_config(a.ways, a.shots, a.pixels)
                                         : ptx::tiny_config(a.ways, a.shots, a.pixels);
      model = a.kind == "zero" ? ptx::zero_model(c) : ptx::random_model(c, a.seed);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto bytes = ptx::serialize_model(model);
  ptx::write_file(a.output, bytes);
  const auto written = ptx::deserialize_model(bytes);
  json m = manifest("init", &written);
  m["seed"] = a.seed;
  m["episodes"] = 0;
  m["timing"] = json::object();
  m["results"] = {{"output", a.output}, {"kind", a.kind}, {"preset", a.preset}, {"bytes", bytes.size()}};
  std::cerr << "wrote " << a.output << " (" << bytes.size() << " bytes)\n";
  emit(m, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plastic-attention transformer inference engine"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
  app.require_subcommand(1);
  app.fallthrough();
  std::string out;
  app.add_option("--out", out, "write the run manifest here instead of stdout");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "few-shot accuracy of a checkpoint");
  eval->add_option("checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--n", ev.ways, "ways")->check(CLI::PositiveNumber);
  eval->add_option("--k", ev.shots, "shots")->check(CLI::PositiveNumber);
  eval->add_option("--episodes", ev.episodes)->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  eval->add_option("--seed", ev.seed);
  eval->add_option("--threads", ev.threads, "0 = hardware concurrency");
  eval->add_option("--mode", ev.mode, "float | quant | plastic | plastic-quant")
      ->check(CLI::IsMember({"float", "quant", "plastic", "plastic-quant"}));
  eval->add_option("--compare", ev.compare, "second mode to run on the same episodes")
      ->check(CLI::IsMember({"float", "quant", "plastic", "plastic-quant"}));
  eval->add_option("--min-agreement", ev.min_agreement, "fail (exit 1) below this prediction agreement")
      ->check(CLI::Range(0.0, 1.0));
  ev.data.add_to(*eval);

  EquivArgs eq;
  auto* equiv = app.add_subcommand("equiv", "plastic vs reference attention on a random model");
  equiv->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  equiv->add_option("--d", eq.d)->check(CLI::PositiveNumber);
  equiv->add_option("--h", eq.h)->check(CLI::PositiveNumber);
  equiv->add_option("--t", eq.t)->check(CLI::PositiveNumber);
  equiv->add_option("--w", eq.w, "window (default: t)");
  equiv->add_option("--layers", eq.layers)->check(CLI::PositiveNumber);
  equiv->add_option("--seed", eq.seed);
  equiv->add_option("--precision", eq.precision)->check(CLI::IsMember({"float", "quant"}));
  equiv->add_option("--tolerance", eq.tolerance)->check(CLI::NonNegativeNumber);

  QuantizeArgs qa;
  auto* quantize = app.add_subcommand("quantize", "snap a checkpoint onto power-of-two grids");
  quantize->add_option("input", qa.input)->required()->check(CLI::ExistingFile);
  quantize->add_option("output", qa.output)->required();
  quantize->add_option("--matrix-bits", qa.matrix_bits)->check(CLI::Range(2, 16));
  quantize->add_option("--vector-bits", qa.vector_bits)->check(CLI::Range(2, 16));
  quantize->add_option("--calibrate", qa.calibrate, "episodes used to fit the key/value cache exponents");
  quantize->add_option("--n", qa.ways, "calibration ways (default: checkpoint classes)");
  quantize->add_option("--k", qa.shots, "calibration shots")->check(CLI::PositiveNumber);
  quantize->add_option("--seed", qa.seed);
  qa.data.add_to(*quantize);

  InspectArgs ia;
  auto* inspect = app.add_subcommand("inspect", "config, manifest and plastic cache state");
  inspect->add_option("checkpoint", ia.checkpoint)->required()->check(CLI::ExistingFile);
  inspect->add_option("--tokens", ia.tokens, "episode tokens to feed before reporting");
  inspect->add_option("--k", ia.shots, "episode shots (default: fills max_seq_len)");
  inspect->add_option("--seed", ia.seed);
  inspect->add_option("--precision", ia.precision)->check(CLI::IsMember({"float", "quant"}));
  inspect->add_option("--dump", ia.dump, "write the engine state as a PTXF container");
  ia.data.add_to(*inspect);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "per-token latency of reference vs plastic attention");
  bench->add_option("--d", ba.dims)->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--t", ba.lengths)->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--w", ba.windows)->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--reps", ba.reps)->check(CLI::PositiveNumber);
  bench->add_option("--seed", ba.seed);

  InitArgs in;
  auto* init = app.add_subcommand("init", "write a random, zero or matcher checkpoint");
  init->add_option("output", in.output)->required();
  init->add_option("--kind", in.kind)->check(CLI::IsMember({"random", "zero", "matcher"}));
  init->add_option("--preset", in.preset)->check(CLI::IsMember({"tiny", "small"}));
  init->add_option("--n", in.ways)->check(CLI::PositiveNumber);
  init->add_option("--k", in.shots)->check(CLI::PositiveNumber);
  init->add_option("--pixels", in.pixels)->check(CLI::PositiveNumber);
  init->add_option("--seed", in.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*eval) return cmd_eval(ev, out);
    if (*equiv) return cmd_equiv(eq, out);
    if (*quantize) return cmd_quantize(qa, out);
    if (*inspect) return cmd_inspect(ia, out);
    if (*bench) return cmd_bench(ba, out);
    if (*init) return cmd_init(in, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
