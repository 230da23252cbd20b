#include <gtest/gtest.h>

#include "ptx/plasticity.hpp"
#include "ptx/random.hpp"

using namespace ptx;

namespace {

using Conn = LearningConnection<std::int64_t>;
using Spike = GradedSpike<std::int64_t>;

ConnectionLimits int8_limits() { return {QuantSpec{8, true, 0}, QuantSpec{8, false, 0}}; }

}  // namespace

TEST(LearningConnection, StartsZeroAndPropagatesDense) {
  LearningConnection<double> c(2, 3, parse_rule(kKeysRule));
  c.set_weights({1, 2, 3, 4, 5, 6});
  const std::vector<GradedSpike<double>> s{{0, 1.0}, {2, 2.0}};
  EXPECT_EQ(c.propagate(s), (std::vector<double>{7, 16}));
  EXPECT_THROW(c.set_weights({1, 2}), std::invalid_argument);
}

TEST(LearningConnection, PropagateAccumulatesRepeatedIndices) {
  Conn c(1, 2, parse_rule(kKeysRule));
  c.set_weights({3, 5});
  const std::vector<Spike> s{{1, 1}, {1, 2}};
  EXPECT_EQ(c.propagate(s), (std::vector<std::int64_t>{15}));
  const std::vector<Spike> bad{{2, 1}};
  EXPECT_THROW(c.propagate(bad), std::out_of_range);
}

TEST(LearningConnection, KeysTriggerOnlyTouchesItsRow) {
  Rng rng(3);
  Conn c(4, 6, parse_rule(kKeysRule), GradedSpikeMode::Overwrite, int8_limits());
  std::vector<std::int64_t> w(24);
  for (auto& v : w) v = static_cast<std::int64_t>(rng.below(256)) - 128;
  c.set_weights(w);
  std::vector<Spike> spikes;
  std::vector<std::int64_t> k(6);
  for (std::size_t j = 0; j < 6; ++j) {
    k[j] = 2 * (static_cast<std::int64_t>(rng.below(128)) - 64);
    spikes.push_back({j, k[j] / 2 + 64});
  }
  c.write_pre_trace(spikes, PreTrace::X1);
  c.trigger_post(2);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(c.weight(i, j), i == 2 ? k[j] : w[i * 6 + j]);
  }
  EXPECT_EQ(c.saturation_count(), 0u);
}

TEST(LearningConnection, ValuesTriggerOnlyTouchesItsColumn) {
  Conn c(3, 4, parse_rule(kValuesRule), GradedSpikeMode::Overwrite, int8_limits());
  c.set_weights(std::vector<std::int64_t>(12, 9));
  const std::vector<std::int64_t> v{5, -7, 0};
  std::vector<std::int64_t> y2, y3;
  for (auto x : v) {
    y2.push_back(std::max<std::int64_t>(x, 0));
    y3.push_back(std::max<std::int64_t>(-x, 0));
  }
  c.write_post_trace(std::vector<std::int64_t>(3, 1), PostTrace::Y1);
  c.write_post_trace(y2, PostTrace::Y2);
  c.write_post_trace(y3, PostTrace::Y3);
  c.trigger_pre(1);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(c.weight(i, j), j == 1 ? v[i] : 9);
  }
}

TEST(LearningConnection, LocalityUnderRandomTriggers) {
  Rng rng(5);
  const RuleExpr rule = parse_rule("x0 * y2 + y0 * x1 - y0 * w");
  LearningConnection<double> c(5, 7, rule);
  for (int step = 0; step < 500; ++step) {
    std::vector<GradedSpike<double>> s;
    for (std::size_t j = 0; j < 7; ++j) s.push_back({j, rng.normal()});
    c.write_pre_trace(s, PreTrace::X1);
    std::vector<double> y(5);
    for (auto& v : y) v = rng.normal();
    c.write_post_trace(y, PostTrace::Y2);
    const std::vector<double> before(c.weights().begin(), c.weights().end());
    const bool post = rng.below(2) == 0;
    const std::size_t idx = post ? rng.below(5) : rng.below(7);
    if (post) {
      c.trigger_post(idx);
    } else {
      c.trigger_pre(idx);
    }
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 7; ++j) {
        const bool touched = post ? i == idx : j == idx;
        if (!touched) EXPECT_EQ(c.weight(i, j), before[i * 7 + j]);
      }
    }
  }
}

TEST(LearningConnection, WeightsSaturateAndCount) {
  Conn c(1, 1, parse_rule("x0 * y2"), GradedSpikeMode::Overwrite, int8_limits());
  c.write_post_trace(std::vector<std::int64_t>{100}, PostTrace::Y2);
  c.trigger_pre(0);
  EXPECT_EQ(c.weight(0, 0), 100);
  c.trigger_pre(0);
  EXPECT_EQ(c.weight(0, 0), 127);
  EXPECT_EQ(c.saturation_count(), 1u);
}

TEST(LearningConnection, TraceModes) {
  Conn over(1, 2, parse_rule(kKeysRule), GradedSpikeMode::Overwrite, int8_limits());
  const std::vector<Spike> s{{0, 200}};
  over.write_pre_trace(s, PreTrace::X1);
  over.write_pre_trace(s, PreTrace::X1);
  EXPECT_EQ(over.traces().x1[0], 200);
  const std::vector<Spike> too_big{{0, 300}};
  EXPECT_THROW(over.write_pre_trace(too_big, PreTrace::X1), std::out_of_range);
  const std::vector<Spike> bad_index{{5, 1}};
  EXPECT_THROW(over.write_pre_trace(bad_index, PreTrace::X1), std::out_of_range);

  Conn acc(1, 2, parse_rule(kKeysRule), GradedSpikeMode::Accumulate, int8_limits());
  acc.write_pre_trace(s, PreTrace::X1);
  acc.write_pre_trace(s, PreTrace::X1);
  EXPECT_EQ(acc.traces().x1[0], 255);
  EXPECT_EQ(acc.saturation_count(), 1u);
}

TEST(LearningConnection, PostTraceChecks) {
  Conn c(2, 1, parse_rule(kValuesRule), GradedSpikeMode::Overwrite, int8_limits());
  EXPECT_THROW(c.write_post_trace(std::vector<std::int64_t>{1}, PostTrace::Y1), std::invalid_argument);
  EXPECT_THROW(c.write_post_trace(std::vector<std::int64_t>{1, -1}, PostTrace::Y2), std::out_of_range);
  EXPECT_THROW(c.trigger_post(2), std::out_of_range);
  EXPECT_THROW(c.trigger_pre(1), std::out_of_range);
}
