#include <gtest/gtest.h>

#include "oracle.hpp"
#include "ptx/decoder.hpp"
#include "ptx/random.hpp"
#include "ptx/reference.hpp"

using namespace ptx;

namespace {

std::vector<Vec> random_inputs(std::size_t t, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec> xs(t, Vec(d));
  for (auto& x : xs) {
    for (auto& v : x) v = rng.normal();
  }
  return xs;
}

ModelConfig config(std::size_t layers, std::size_t d, std::size_t h, std::size_t w, std::size_t t) {
  ModelConfig c;
  c.layers = layers;
  c.dim = d;
  c.heads = h;
  c.window = w;
  c.max_seq_len = t;
  return c;
}

}  // namespace

TEST(ModelConfig, Validation) {
  EXPECT_NO_THROW(config(1, 8, 2, 1, 1).validate());
  EXPECT_THROW(config(1, 8, 3, 4, 4).validate(), std::invalid_argument);
  EXPECT_THROW(config(1, 8, 2, 0, 4).validate(), std::invalid_argument);
  const auto tiny = tiny_config(5, 1, 16);
  EXPECT_EQ(tiny.layers, 4u);
  EXPECT_EQ(tiny.dim, 128u);
  EXPECT_EQ(tiny.heads, 1u);
  EXPECT_EQ(tiny.max_seq_len, 6u);
  const auto small = small_config(5, 5, 16);
  EXPECT_EQ(small.layers, 6u);
  EXPECT_EQ(small.dim, 256u);
  EXPECT_EQ(small.heads, 8u);
  EXPECT_EQ(small.max_seq_len, 26u);
}

TEST(Mlp, ZeroW1GivesBias) {
  const auto c = config(1, 8, 1, 4, 4);
  Model m = random_model(c, 1);
  for (auto& v : m.layers[0].mlp.w1.values()) v = 0;
  EXPECT_EQ(mlp_step(m.layers[0].mlp, Vec(8, 0.7), Kernels::float_mode()), m.layers[0].mlp.b2);
}

TEST(Mlp, NegativePreActivationsGiveBias) {
  const auto c = config(1, 4, 1, 4, 4);
  Model m = random_model(c, 2);
  for (auto& v : m.layers[0].mlp.w1.values()) v = -1;
  EXPECT_EQ(mlp_step(m.layers[0].mlp, Vec(4, 1.0), Kernels::float_mode()), m.layers[0].mlp.b2);
}

TEST(Mlp, MatchesFormulaOracle) {
  const auto c = config(1, 16, 1, 4, 4);
  const Model m = random_model(c, 3);
  const auto xs = random_inputs(10, 16, 4);
  for (const auto& x : xs) {
    EXPECT_LT(oracle::max_abs_diff(mlp_step(m.layers[0].mlp, x, Kernels::float_mode(c.rms_eps)),
                                   oracle::mlp(m.layers[0].mlp, x, c.rms_eps)),
              1e-12);
  }
}

TEST(RefAttention, CacheGrowsOneRowPerToken) {
  const auto c = config(1, 8, 2, 16, 16);
  const Model m = random_model(c, 5);
  RefAttentionBlock block(m.layers[0].attn, c, Kernels::float_mode());
  const auto xs = random_inputs(5, 8, 6);
  for (std::size_t t = 0; t < 5; ++t) {
    block.step(xs[t]);
    EXPECT_EQ(block.keys().size(), t + 1);
    EXPECT_EQ(block.values().size(), t + 1);
    EXPECT_EQ(block.last_probs().size(), 2u);
    EXPECT_EQ(block.last_probs()[0].size(), t + 1);
  }
}

TEST(Decoder, AutoregressiveMatchesIndependentOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t h = std::size_t{1} << rng.below(3);
    const std::size_t d = h * (2 + rng.below(6));
    const std::size_t t = 1 + rng.below(16);
    auto c = config(1 + rng.below(3), d, h, 1 + rng.below(t + 1), t);
    const auto m = std::make_shared<const Model>(random_model(c, trial));
    const auto xs = random_inputs(t, d, 50 + trial);
    const auto want = oracle::decoder(*m, xs);
    const auto k = Kernels::float_mode(c.rms_eps);
    EXPECT_LT(oracle::max_abs_diff(forward_autoregressive(m, xs, AttentionImpl::Reference, k), want), 1e-9);
    EXPECT_LT(oracle::max_abs_diff(forward_autoregressive(m, xs, AttentionImpl::Plastic, k), want), 1e-9);
    EXPECT_LT(oracle::max_abs_diff(forward_parallel(*m, xs, k), want), 1e-9);
  }
}

TEST(Decoder, ParallelMatchesAutoregressiveUpToL4D128) {
  const auto c = config(4, 128, 1, 32, 32);
  const auto m = std::make_shared<const Model>(random_model(c, 9));
  const auto xs = random_inputs(32, 128, 10);
  const auto k = Kernels::float_mode(c.rms_eps);
  EXPECT_LT(oracle::max_abs_diff(forward_parallel(*m, xs, k), forward_autoregressive(m, xs, AttentionImpl::Reference, k)),
            1e-5);
}

TEST(Decoder, CausalityUnderPerturbation) {
  for (auto precision : {Precision::Float, Precision::Quant}) {
    const auto c = config(2, 16, 2, 6, 12);
    const auto m = std::make_shared<const Model>(random_model(c, 11));
    const auto k = make_kernels(c, precision);
    auto xs = random_inputs(12, 16, 12);
    const auto base_par = forward_parallel(*m, xs, k);
    const auto base_ar = forward_autoregressive(m, xs, AttentionImpl::Plastic, k);
    for (std::size_t t = 0; t + 1 < 12; ++t) {
      auto ys = xs;
      for (auto& v : ys[t + 1]) v += 3.0;
      const auto par = forward_parallel(*m, ys, k);
      const auto ar = forward_autoregressive(m, ys, AttentionImpl::Plastic, k);
      for (std::size_t s = 0; s <= t; ++s) {
        EXPECT_EQ(par[s], base_par[s]);
        EXPECT_EQ(ar[s], base_ar[s]);
      }
      EXPECT_NE(par[t + 1], base_par[t + 1]);
    }
  }
}

TEST(Decoder, QuantParallelMatchesQuantAutoregressive) {
  const auto c = config(2, 32, 2, 8, 20);
  const auto m = std::make_shared<const Model>(random_model(c, 13));
  const auto xs = random_inputs(20, 32, 14);
  const auto k = make_kernels(c, Precision::Quant);
  const auto par = forward_parallel(*m, xs, k);
  const auto ar = forward_autoregressive(m, xs, AttentionImpl::Reference, k);
  EXPECT_LE(oracle::max_abs_diff(par, ar), c.quant.activation.scale());
}

TEST(Decoder, SequenceLongerThanMaxLengthThrows) {
  const auto c = config(1, 8, 1, 4, 4);
  const Model m = random_model(c, 1);
  EXPECT_THROW(forward_parallel(m, random_inputs(5, 8, 1), Kernels::float_mode()), std::length_error);
}

TEST(Model, TensorNamesAndShapes) {
  auto c = config(2, 8, 2, 4, 4);
  c.final_norm = true;
  const Model m = random_model(c, 1);
  const auto views = tensors(m);
  const auto expected = expected_tensors(c);
  ASSERT_EQ(views.size(), expected.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    EXPECT_EQ(views[i].name, expected[i].first);
    EXPECT_EQ(views[i].shape, expected[i].second);
  }
  EXPECT_EQ(views.front().name, "encoder.weight");
  EXPECT_EQ(views.back().name, "head.bias");
  EXPECT_EQ(views[2].name, "layers.0.attn.norm");
}

TEST(Model, RandomModelDeterministic) {
  const auto c = config(1, 8, 1, 4, 4);
  const auto a = tensors(random_model(c, 5));
  const Model b = random_model(c, 5);
  const auto bv = tensors(b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(std::equal(a[i].values.begin(), a[i].values.end(), bv[i].values.begin()));
  }
}

TEST(Model, QuantizeModelStatsAndIdempotence) {
  const auto c = config(1, 16, 1, 4, 4);
  Model m = random_model(c, 6);
  const auto stats = quantize_model(m);
  for (const auto& s : stats) {
    EXPECT_LE(s.max_error, s.spec.scale() / 2) << s.name;
    EXPECT_EQ(s.saturated, 0u) << s.name;
    EXPECT_EQ(s.spec.bits, s.name.find("norm") != std::string::npos || s.name.find("bias") != std::string::npos ||
                                   s.name.find(".bo") != std::string::npos || s.name.find(".b2") != std::string::npos
                               ? c.quant.vector_bits
                               : c.quant.matrix_bits);
  }
  Model again = m;
  quantize_model(again);
  const auto a = tensors(m), b = tensors(again);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin())) << a[i].name;
  }
  EXPECT_EQ(m.tensor_formats, again.tensor_formats);
}
