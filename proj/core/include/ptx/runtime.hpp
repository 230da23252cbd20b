#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptx/checkpoint.hpp"
#include "ptx/decoder.hpp"
#include "ptx/episode.hpp"
#include "ptx/model.hpp"

namespace ptx {

enum class ExecutionMode { Float, Quant, Plastic, PlasticQuant };

/// "float" | "quant" | "plastic" | "plastic-quant"
std::optional<ExecutionMode> parse_execution_mode(std::string_view text);
std::string_view mode_name(ExecutionMode mode);
AttentionImpl attention_impl(ExecutionMode mode);
Precision precision(ExecutionMode mode);

/// e = rmsnorm(W_e * input + b_e), with a ReLU before the norm if config.encoder_relu.
Vec embed_token(const Model& model, std::span<const double> input, const Kernels& kernels);
/// N class scores from the last layer's output at one position.
Vec head_scores(const Model& model, std::span<const double> h, const Kernels& kernels);

struct EpisodeResult {
  std::size_t predicted = 0;
  Vec scores;
};

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax(std::span<const double> scores);

/// Feeds the support tokens and the query autoregressively and classifies
/// the query from the final position. Throws std::invalid_argument if the
/// episode does not fit the model (N, P, sequence length).
EpisodeResult run_episode(std::shared_ptr<const Model> model, const Episode& episode, ExecutionMode mode);

struct AccuracyInterval {
  double low = 0.0, high = 0.0;
};

/// Wilson score interval; z = 1.96 gives 95%.
AccuracyInterval wilson_interval(std::size_t correct, std::size_t count, double z = 1.959963984540054);

struct EvalOptions {
  std::size_t ways = 5;
  std::size_t shots = 1;
  std::size_t episodes = 256;
  std::uint64_t seed = 0;
  /// 0 selects std::thread::hardware_concurrency().
  std::size_t threads = 0;
};

struct EvalReport {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  AccuracyInterval interval;
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> labels;
  std::vector<Vec> scores;  // empty when evaluating a bare predictor
};

/// Episode i is drawn with seed derive_seed(options.seed, i), so results do
/// not depend on the thread count.
EvalReport evaluate(std::shared_ptr<const Model> model, const FewShotDataset& dataset, const EvalOptions& options,
                    ExecutionMode mode);

/// Same harness for an arbitrary classifier. Must be safe to call concurrently.
using EpisodePredictor = std::function<std::size_t(const Episode&)>;
EvalReport evaluate(const EpisodePredictor& predictor, const FewShotDataset& dataset, const EvalOptions& options);

struct CalibrationStats {
  double max_key = 0.0;
  double max_value = 0.0;
  double max_activation = 0.0;
  std::size_t episodes = 0;
};

/// Largest |k|, |v| and layer output seen on float reference runs.
CalibrationStats calibrate(std::shared_ptr<const Model> model, const FewShotDataset& dataset, const EvalOptions& options);
/// Sets the key and value cache exponents to the smallest grids covering the stats.
void apply_calibration(QuantConfig& quant, const CalibrationStats& stats);

/// Plastic-session caches as a PTXF container of kind "engine-state":
/// per layer and head the keys (W x D_h) and values (D_h x W) weights and the
/// key pre-traces, dequantized in integer mode. Meta records tokens seen and
/// the slot holding the most recent token.
Container dump_engine_state(const DecoderSession& session);

}  // namespace ptx
