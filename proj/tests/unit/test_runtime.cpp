#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracle.hpp"
#include "ptx/error.hpp"
#include "ptx/matcher.hpp"
#include "ptx/random.hpp"
#include "ptx/runtime.hpp"

using namespace ptx;

TEST(ExecutionMode, ParseAndName) {
  for (auto m : {ExecutionMode::Float, ExecutionMode::Quant, ExecutionMode::Plastic, ExecutionMode::PlasticQuant}) {
    EXPECT_EQ(parse_execution_mode(mode_name(m)), m);
  }
  EXPECT_FALSE(parse_execution_mode("fast").has_value());
  EXPECT_EQ(attention_impl(ExecutionMode::PlasticQuant), AttentionImpl::Plastic);
  EXPECT_EQ(precision(ExecutionMode::Quant), Precision::Quant);
}

TEST(EmbedToken, ZeroInputZeroBiasGivesZero) {
  Model m = random_model(tiny_config(5, 1, 16), 1);
  std::fill(m.encoder.bias.begin(), m.encoder.bias.end(), 0.0);
  for (double v : embed_token(m, Vec(22, 0.0), Kernels::float_mode())) EXPECT_EQ(v, 0.0);
}

TEST(EmbedToken, MatchesFormulaOracle) {
  for (bool relu : {true, false}) {
    auto c = tiny_config(5, 1, 16);
    c.encoder_relu = relu;
    const Model m = random_model(c, 2);
    Rng rng(3);
    Vec in(22);
    for (auto& v : in) v = rng.uniform();
    Vec pre = oracle::plus(oracle::matvec(m.encoder.weight, in), m.encoder.bias);
    if (relu) {
      for (double& v : pre) v = std::max(v, 0.0);
    }
    const Vec want = oracle::rmsnorm(pre, Vec(128, 1.0), m.config.rms_eps);
    EXPECT_LT(oracle::max_abs_diff(embed_token(m, in, Kernels::float_mode(m.config.rms_eps)), want), 1e-12);
  }
  const Model m = random_model(tiny_config(5, 1, 16), 2);
  EXPECT_THROW(embed_token(m, Vec(21, 0.0), Kernels::float_mode()), ShapeError);
}

TEST(EmbedToken, LabelChangesEmbedding) {
  const Model m = random_model(tiny_config(5, 1, 16), 4);
  Vec a(22, 0.3), b(22, 0.3);
  std::fill(a.begin() + 16, a.end(), 0.0);
  std::fill(b.begin() + 16, b.end(), 0.0);
  a[16] = 1.0;
  b[17] = 1.0;
  EXPECT_GT(oracle::max_abs_diff(embed_token(m, a, Kernels::float_mode()), embed_token(m, b, Kernels::float_mode())), 1e-3);
}

TEST(Argmax, LowestIndexWinsTies) {
  EXPECT_EQ(argmax(Vec{1, 3, 3, 2}), 1u);
  EXPECT_THROW(argmax(Vec{}), ShapeError);
}

TEST(RunEpisode, SupportOrderDoesNotMatter) {
  // No positional encoding and W >= N*K+1: with one causal layer the query
  // sees the same set of support embeddings in any order. Deeper stacks are
  // order dependent because each support token only sees its prefix.
  auto c = tiny_config(5, 2, 16);
  c.layers = 1;
  const auto m = std::make_shared<const Model>(random_model(c, 5));
  const SyntheticDataset d(20, 5);
  for (auto mode : {ExecutionMode::Float, ExecutionMode::Plastic}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Episode ep = sample_episode(d, 5, 2, seed);
      const auto base = run_episode(m, ep, mode);
      Rng rng(seed);
      rng.shuffle(std::span<SupportItem>(ep.support));
      EXPECT_LT(oracle::max_abs_diff(run_episode(m, ep, mode).scores, base.scores), 1e-5);
    }
  }
}

TEST(RunEpisode, ConfigMismatchThrows) {
  const auto m = std::make_shared<const Model>(random_model(tiny_config(5, 1, 16), 6));
  EXPECT_THROW(run_episode(m, sample_episode(SyntheticDataset(10, 5), 4, 1, 0), ExecutionMode::Float),
               std::invalid_argument);
  EXPECT_THROW(run_episode(m, sample_episode(SyntheticDataset(10, 5, 8), 5, 1, 0), ExecutionMode::Float),
               std::invalid_argument);
  EXPECT_THROW(run_episode(m, sample_episode(SyntheticDataset(10, 5), 5, 2, 0), ExecutionMode::Float),
               std::invalid_argument);
}

TEST(Wilson, KnownValues) {
  const auto i = wilson_interval(50, 100);
  EXPECT_NEAR(i.low, 0.4038, 1e-4);
  EXPECT_NEAR(i.high, 0.5962, 1e-4);
  const auto all = wilson_interval(10, 10);
  EXPECT_NEAR(all.high, 1.0, 1e-12);
  EXPECT_NEAR(all.low, 0.7225, 1e-4);
  EXPECT_EQ(wilson_interval(0, 10).low, 0.0);
  EXPECT_THROW(wilson_interval(0, 0), std::invalid_argument);
  EXPECT_THROW(wilson_interval(3, 2), std::invalid_argument);
}

TEST(Evaluate, AllCorrectStubIsPerfect) {
  const SyntheticDataset d(20, 5);
  const auto r = evaluate([](const Episode& ep) { return ep.query_label; }, d, {5, 1, 100, 1, 2});
  EXPECT_EQ(r.correct, 100u);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Evaluate, ConstantStubIsNearChance) {
  const SyntheticDataset d(20, 5);
  const auto r = evaluate([](const Episode&) { return std::size_t{0}; }, d, {5, 1, 2000, 2, 2});
  EXPECT_NEAR(r.accuracy, 0.2, 0.03);
  EXPECT_LE(r.interval.low, r.accuracy);
  EXPECT_GE(r.interval.high, r.accuracy);
}

TEST(Evaluate, ZeroEpisodesThrows) {
  const SyntheticDataset d(20, 5);
  EXPECT_THROW(evaluate([](const Episode&) { return std::size_t{0}; }, d, {5, 1, 0, 0, 1}), std::invalid_argument);
}

TEST(Evaluate, ResultsIndependentOfThreadCount) {
  const auto m = std::make_shared<const Model>(random_model(tiny_config(5, 1, 16), 7));
  const SyntheticDataset d(20, 5);
  const auto a = evaluate(m, d, {5, 1, 24, 9, 1}, ExecutionMode::Float);
  const auto b = evaluate(m, d, {5, 1, 24, 9, 4}, ExecutionMode::Float);
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_EQ(a.scores, b.scores);
}

TEST(Evaluate, WorkerFailurePropagates) {
  const SyntheticDataset d(20, 5);
  EXPECT_THROW(evaluate([](const Episode&) -> std::size_t { throw std::runtime_error("boom"); }, d, {5, 1, 8, 0, 3}),
               std::runtime_error);
}

TEST(Matcher, IdenticalQueryIsRecognised) {
  // Noise-free classes: the query is a copy of its class's support image.
  const auto m = std::make_shared<const Model>(matcher_model(matcher_config(2, 1, 16)));
  const SyntheticDataset d(50, 3, 16, 0.0, 4);
  for (auto mode : {ExecutionMode::Float, ExecutionMode::Plastic, ExecutionMode::Quant, ExecutionMode::PlasticQuant}) {
    const auto r = evaluate(m, d, {2, 1, 256, 11, 0}, mode);
    EXPECT_GE(r.accuracy, 0.95) << mode_name(mode);
  }
}

TEST(Matcher, PlasticAgreesWithReference) {
  const auto m = std::make_shared<const Model>(matcher_model(matcher_config(5, 1, 16)));
  const SyntheticDataset d(50, 10, 16, 0.15, 5);
  const auto a = evaluate(m, d, {5, 1, 256, 12, 0}, ExecutionMode::Float);
  const auto b = evaluate(m, d, {5, 1, 256, 12, 0}, ExecutionMode::Plastic);
  EXPECT_EQ(a.predictions, b.predictions);
  double diff = 0;
  for (std::size_t i = 0; i < a.scores.size(); ++i) diff = std::max(diff, oracle::max_abs_diff(a.scores[i], b.scores[i]));
  EXPECT_LT(diff, 1e-4);
}

TEST(Matcher, RelabelingDoesNotChangeAccuracy) {
  const auto m = std::make_shared<const Model>(matcher_model(matcher_config(5, 1, 16)));
  const SyntheticDataset d(50, 10, 16, 0.3, 6);
  const auto predict = [&](std::vector<std::size_t> perm) {
    return [m, perm](const Episode& ep) {
      Episode e = ep;
      for (auto& s : e.support) s.label = perm[s.label];
      e.query_label = perm[e.query_label];
      const auto r = run_episode(m, e, ExecutionMode::Float);
      return static_cast<std::size_t>(std::find(perm.begin(), perm.end(), r.predicted) - perm.begin());
    };
  };
  const auto a = evaluate(predict({0, 1, 2, 3, 4}), d, {5, 1, 1024, 13, 0});
  const auto b = evaluate(predict({3, 0, 4, 1, 2}), d, {5, 1, 1024, 13, 0});
  EXPECT_NEAR(a.accuracy, b.accuracy, 0.02);
}

TEST(Matcher, RejectsUnsupportedShapes) {
  auto c = matcher_config(5, 1, 16);
  c.heads = 2;
  EXPECT_THROW(matcher_model(c), std::invalid_argument);
  c = tiny_config(5, 1, 200);
  EXPECT_THROW(matcher_model(c), std::invalid_argument);
  EXPECT_GE(matcher_config(5, 1, 784).dim, 784u + 12u);
}

TEST(Calibration, CoversObservedRanges) {
  const auto m = std::make_shared<const Model>(random_model(tiny_config(5, 1, 16), 8));
  const SyntheticDataset d(20, 5);
  const auto stats = calibrate(m, d, {5, 1, 8, 0, 1});
  EXPECT_EQ(stats.episodes, 8u);
  EXPECT_GT(stats.max_key, 0.0);
  QuantConfig q;
  apply_calibration(q, stats);
  EXPECT_LE(stats.max_key, 126 * q.keys.scale());
  EXPECT_GT(stats.max_key, 126 * q.keys.scale() / 2);
  EXPECT_LE(stats.max_value, 127 * q.values.scale());
}
