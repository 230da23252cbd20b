#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "ptx/error.hpp"
#include "ptx/fixed_point.hpp"
#include "ptx/numerics.hpp"
#include "ptx/random.hpp"

using namespace ptx;

namespace {

constexpr double kBound = 1.0 / 256;

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

// Log-uniform sweep over [lo, hi].
std::vector<double> log_sweep(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return xs;
}

}  // namespace

TEST(Fixed, ConversionAndArithmetic) {
  EXPECT_EQ(Fixed::from_double(1.0), Fixed::one());
  EXPECT_EQ(Fixed::from_double(0.5).raw(), Fixed::kOne / 2);
  EXPECT_EQ((Fixed::from_double(1.5) + Fixed::from_double(2.25)).to_double(), 3.75);
  EXPECT_EQ((Fixed::from_double(1.5) - Fixed::from_double(2.25)).to_double(), -0.75);
  EXPECT_EQ((Fixed::from_double(1.5) * Fixed::from_double(-2.0)).to_double(), -3.0);
  EXPECT_LT(Fixed::from_double(-1.0), Fixed::from_double(1.0));
}

TEST(Fixed, MultiplicationRoundsHalfToEven) {
  // raw 1 * raw 2^31 = 0.5 ulp -> 0; raw 3 * 2^31 = 1.5 ulp -> 2.
  const Fixed half = Fixed::from_raw(std::int64_t{1} << 31);
  EXPECT_EQ((Fixed::from_raw(1) * half).raw(), 0);
  EXPECT_EQ((Fixed::from_raw(3) * half).raw(), 2);
  EXPECT_EQ((Fixed::from_raw(5) * half).raw(), 2);
}

TEST(Fixed, SaturatesOutOfRange) {
  EXPECT_EQ(Fixed::from_double(1e30).raw(), std::numeric_limits<std::int64_t>::max());
  EXPECT_EQ(Fixed::from_double(-1e30).raw(), std::numeric_limits<std::int64_t>::min());
  const Fixed big = Fixed::from_double(1e9);
  EXPECT_EQ((big * big).raw(), std::numeric_limits<std::int64_t>::max());
}

TEST(FixedExp, ZeroIsExactlyOne) { EXPECT_EQ(fixed_exp(Fixed{}), Fixed::one()); }

TEST(FixedExp, RelativeErrorWithinBoundOverDeclaredRange) {
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = kExpRange.lo + (kExpRange.hi - kExpRange.lo) * i / 9999.0;
    worst = std::max(worst, rel_err(fixed_exp(Fixed::from_double(x)).to_double(), std::exp(x)));
  }
  EXPECT_LE(worst, kBound);
}

TEST(FixedExp, PositiveArgumentsAndUnderflow) {
  EXPECT_NEAR(fixed_exp(Fixed::from_double(2.0)).to_double(), std::exp(2.0), std::exp(2.0) * kBound);
  EXPECT_EQ(fixed_exp(Fixed::from_double(-100.0)).raw(), 0);
  EXPECT_EQ(fixed_exp(Fixed::from_double(40.0)).raw(), std::numeric_limits<std::int64_t>::max());
}

TEST(FixedExp, Monotone) {
  Fixed prev = fixed_exp(Fixed::from_double(-16.0));
  for (int i = 1; i <= 4000; ++i) {
    const Fixed cur = fixed_exp(Fixed::from_double(-16.0 + 16.0 * i / 4000));
    EXPECT_GE(cur, prev);
    prev = cur;
  }
}

TEST(FixedRecip, RelativeErrorWithinBoundOverDeclaredRange) {
  double worst = 0;
  for (double x : log_sweep(kRecipRange.lo, kRecipRange.hi, 10000)) {
    worst = std::max(worst, rel_err(fixed_recip(Fixed::from_double(x)).to_double(), 1.0 / Fixed::from_double(x).to_double()));
  }
  EXPECT_LE(worst, kBound);
  EXPECT_NEAR(fixed_recip(Fixed::one()).to_double(), 1.0, 1e-6);
}

TEST(FixedRsqrt, RelativeErrorWithinBoundOverDeclaredRange) {
  double worst = 0;
  for (double x : log_sweep(kRsqrtRange.lo, kRsqrtRange.hi, 10000)) {
    const double xq = Fixed::from_double(x).to_double();
    worst = std::max(worst, rel_err(fixed_rsqrt(Fixed::from_double(x)).to_double(), 1.0 / std::sqrt(xq)));
  }
  EXPECT_LE(worst, kBound);
  EXPECT_NEAR(fixed_rsqrt(Fixed::from_double(4.0)).to_double(), 0.5, 1e-6);
}

TEST(FixedRecipRsqrt, NonPositiveIsDomainError) {
  EXPECT_THROW(fixed_recip(Fixed{}), DomainError);
  EXPECT_THROW(fixed_recip(Fixed::from_double(-2.0)), DomainError);
  EXPECT_THROW(fixed_rsqrt(Fixed{}), DomainError);
  EXPECT_THROW(fixed_rsqrt(Fixed::from_double(-0.5)), DomainError);
}

TEST(FixedSoftmax, SumsToOneAndTracksFloat) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    Vec a(1 + rng.below(64));
    for (auto& v : a) v = 4 * rng.normal();
    const Vec p = fixed_softmax(std::span<const double>(a));
    double sum = 0;
    for (double v : p) sum += v;
    EXPECT_NEAR(sum, 1.0, kBound);
    EXPECT_LT(oracle::max_abs_diff(p, oracle::softmax(a)), kBound);
  }
}

TEST(FixedSoftmax, SingletonAndEmpty) {
  EXPECT_NEAR(fixed_softmax(std::span<const double>(Vec{3.0}))[0], 1.0, 1e-6);
  EXPECT_THROW(fixed_softmax(std::span<const double>(Vec{})), ShapeError);
}

TEST(FixedRmsnorm, CloseToFloatRmsnorm) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(128);
    Vec x(n), g(n);
    for (auto& v : x) v = 3 * rng.normal();
    for (auto& v : g) v = rng.uniform(0.5, 1.5);
    const Vec want = oracle::rmsnorm(x, g, 1e-6);
    const Vec got = fixed_rmsnorm(x, g, 1e-6);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], kBound * (std::abs(want[i]) + 1e-3));
  }
}

TEST(FixedRmsnorm, ZeroVectorStaysZero) {
  const Vec z(16, 0.0), g(16, 1.0);
  for (double v : fixed_rmsnorm(z, g, 1.0 / 256)) EXPECT_EQ(v, 0.0);
}
