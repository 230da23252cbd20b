#include <gtest/gtest.h>

#include <cmath>

#include "ptx/quant.hpp"
#include "ptx/random.hpp"

using namespace ptx;

TEST(QuantSpec, RangesAndScale) {
  const QuantSpec s8{8, true, -6};
  EXPECT_EQ(s8.min_code(), -128);
  EXPECT_EQ(s8.max_code(), 127);
  EXPECT_EQ(s8.scale(), 1.0 / 64);
  const QuantSpec u8{8, false, 0};
  EXPECT_EQ(u8.min_code(), 0);
  EXPECT_EQ(u8.max_code(), 255);
  EXPECT_THROW((QuantSpec{1, true, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((QuantSpec{33, true, 0}.validate()), std::invalid_argument);
}

TEST(RoundHalfEven, Ties) {
  EXPECT_EQ(round_half_even(0.5), 0.0);
  EXPECT_EQ(round_half_even(1.5), 2.0);
  EXPECT_EQ(round_half_even(2.5), 2.0);
  EXPECT_EQ(round_half_even(-0.5), -0.0);
  EXPECT_EQ(round_half_even(-1.5), -2.0);
  EXPECT_EQ(round_half_even(2.4999), 2.0);
}

TEST(Quantize, ZeroMapsToZero) {
  const auto q = quantize(Vec{0.0}, QuantSpec{8, true, -3});
  EXPECT_EQ(q.codes[0], 0);
  EXPECT_EQ(q.dequantize()[0], 0.0);
}

TEST(Quantize, SaturatesBeyondRange) {
  const QuantSpec s{8, true, -4};
  const auto q = quantize(Vec{1000.0, -1000.0, 1.0}, s);
  EXPECT_EQ(q.codes[0], 127);
  EXPECT_EQ(q.codes[1], -128);
  EXPECT_EQ(q.codes[2], 16);
  EXPECT_EQ(q.saturated, 2u);
  EXPECT_EQ(q.dequantize()[0], 127 * s.scale());
}

TEST(Quantize, ErrorBoundedByHalfScaleInRange) {
  Rng rng(1);
  const QuantSpec s{8, true, -5};
  Vec x(10000);
  for (auto& v : x) v = rng.uniform(-3.9, 3.9);
  const auto q = quantize(x, s);
  EXPECT_EQ(q.saturated, 0u);
  const Vec d = q.dequantize();
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(d[i] - x[i]), s.scale() / 2);
}

TEST(Quantize, IdempotentOnDequantizedValues) {
  Rng rng(2);
  const QuantSpec s{8, true, -3};
  Vec x(1000);
  for (auto& v : x) v = rng.uniform(-30, 30);
  const auto q1 = quantize(x, s);
  const auto q2 = quantize(q1.dequantize(), s);
  EXPECT_EQ(q1.codes, q2.codes);
}

TEST(Quantize, MatrixKeepsShape) {
  const Mat m(2, 3, {0.1, 0.2, 0.3, -0.1, -0.2, -0.3});
  const auto q = quantize(m, QuantSpec{8, true, -7});
  EXPECT_EQ(q.shape, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(q.codes.size(), 6u);
}

TEST(QuantizeValue, NanIsRejectedOrClamped) {
  bool sat = false;
  const auto c = quantize_value(std::nan(""), QuantSpec{8, true, 0}, &sat);
  EXPECT_GE(c, -128);
  EXPECT_LE(c, 127);
}

TEST(QuantizeValueEven, OnlyEvenCodes) {
  const QuantSpec s{8, true, 0};
  for (double x = -140; x <= 140; x += 0.25) {
    const auto c = quantize_value_even(x, s);
    EXPECT_EQ(c % 2, 0) << x;
    EXPECT_GE(c, -128);
    EXPECT_LE(c, 126);
  }
  EXPECT_EQ(quantize_value_even(3.0, s), 4);  // 1.5 -> 2 (tie to even)
  EXPECT_EQ(quantize_value_even(5.0, s), 4);  // 2.5 -> 2
  EXPECT_EQ(snap_even(1000.0, s), 126.0);
}

TEST(CoveringExponent, SmallestCoveringGrid) {
  EXPECT_EQ(covering_exponent(0.0, 8, true), 0);
  EXPECT_EQ(covering_exponent(1.0, 8, true), -6);    // 127/64 >= 1 > 127/128
  EXPECT_EQ(covering_exponent(127.0, 8, true), 0);
  EXPECT_EQ(covering_exponent(127.5, 8, true), 1);
  EXPECT_EQ(covering_exponent(255.0, 8, false), 0);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double m = std::exp(rng.uniform(-20, 20));
    const int e = covering_exponent(m, 8, true);
    EXPECT_LE(m, 127 * std::ldexp(1.0, e));
    EXPECT_GT(m, 127 * std::ldexp(1.0, e - 1));
  }
}

TEST(Snap, EqualsDequantizedCode) {
  const QuantSpec s{16, true, -8};
  EXPECT_EQ(snap(1.0 / 512, s), 0.0);  // tie -> even code 0
  EXPECT_EQ(snap(3.0 / 512, s), 2.0 / 256);
  EXPECT_EQ(snap(1e9, s), 32767.0 / 256);
}
