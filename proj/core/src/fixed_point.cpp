#include "ptx/fixed_point.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "ptx/error.hpp"
#include "ptx/quant.hpp"

namespace ptx {

namespace {

__extension__ using i128 = __int128;
__extension__ using u128 = unsigned __int128;

constexpr int kMantBits = 60;  // internal Q.60 mantissa arithmetic
constexpr u128 kMantOne = u128{1} << kMantBits;

std::int64_t saturate(i128 v) noexcept {
  constexpr i128 hi = std::numeric_limits<std::int64_t>::max();
  constexpr i128 lo = std::numeric_limits<std::int64_t>::min();
  return static_cast<std::int64_t>(std::clamp(v, lo, hi));
}

/// v * 2^-shift with round half to even (shift >= 0), or v * 2^(-shift) exactly for shift < 0.
i128 shift_round(i128 v, int shift) noexcept {
  if (shift <= 0) {
    if (-shift >= 126) return v == 0 ? 0 : (v > 0 ? std::numeric_limits<std::int64_t>::max() : std::numeric_limits<std::int64_t>::min());
    return v << -shift;
  }
  if (shift >= 126) return 0;
  const i128 floor = v >> shift;  // arithmetic shift floors
  const i128 rem = v - (floor << shift);
  const i128 half = i128{1} << (shift - 1);
  if (rem > half || (rem == half && (floor & 1))) return floor + 1;
  return floor;
}

u128 mul_mant(u128 a, u128 b) noexcept {
  // Both operands are Q.60 with magnitude < 4, so the product fits in 124 bits.
  const u128 p = a * b;
  return (p + (u128{1} << (kMantBits - 1))) >> kMantBits;
}

// Relative-minimax cubic for 2^f on [0, 1] with p(0) == 1; max relative error 8.6e-5.
constexpr double kExp2C1 = 0.69511678641122931;
constexpr double kExp2C2 = 0.22764499121162898;
constexpr double kExp2C3 = 0.077067041988160639;

constexpr u128 to_mant(double c) { return static_cast<u128>(c * static_cast<double>(u128{1} << kMantBits) + 0.5); }

constexpr u128 kC1 = to_mant(kExp2C1);
constexpr u128 kC2 = to_mant(kExp2C2);
constexpr u128 kC3 = to_mant(kExp2C3);
// log2(e) in Q.62.
constexpr i128 kLog2eQ62 = static_cast<i128>(1.4426950408889634 * 4611686018427387904.0);

constexpr std::size_t kSeedEntries = 64;

// 1/m for m in [0.5, 1), evaluated at the midpoint of each of the 64 sub-intervals.
constexpr std::array<u128, kSeedEntries> make_recip_seeds() {
  std::array<u128, kSeedEntries> t{};
  for (std::size_t i = 0; i < kSeedEntries; ++i) {
    const double mid = 0.5 + (static_cast<double>(i) + 0.5) / 128.0;
    t[i] = to_mant(1.0 / mid);
  }
  return t;
}

constexpr double const_sqrt(double x) {
  double r = x > 1.0 ? x : 1.0;
  for (int i = 0; i < 64; ++i) r = 0.5 * (r + x / r);
  return r;
}

// 1/sqrt(m) for m in [0.25, 1), midpoints of 64 equal sub-intervals.
constexpr std::array<u128, kSeedEntries> make_rsqrt_seeds() {
  std::array<u128, kSeedEntries> t{};
  for (std::size_t i = 0; i < kSeedEntries; ++i) {
    const double mid = 0.25 + (static_cast<double>(i) + 0.5) * (0.75 / 64.0);
    t[i] = to_mant(1.0 / const_sqrt(mid));
  }
  return t;
}

constexpr auto kRecipSeeds = make_recip_seeds();
constexpr auto kRsqrtSeeds = make_rsqrt_seeds();

int msb(std::uint64_t v) noexcept { return 63 - std::countl_zero(v); }

}  // namespace

Fixed Fixed::from_double(double x) noexcept {
  const double scaled = round_half_even(std::ldexp(x, kFracBits));
  if (std::isnan(scaled)) return Fixed(0);
  if (scaled >= 0x1p63) return Fixed(std::numeric_limits<std::int64_t>::max());
  if (scaled < -0x1p63) return Fixed(std::numeric_limits<std::int64_t>::min());
  return Fixed(static_cast<std::int64_t>(scaled));
}

double Fixed::to_double() const noexcept { return std::ldexp(static_cast<double>(raw_), -kFracBits); }

Fixed operator*(Fixed a, Fixed b) noexcept {
  const i128 p = static_cast<i128>(a.raw()) * static_cast<i128>(b.raw());
  return Fixed::from_raw(saturate(shift_round(p, Fixed::kFracBits)));
}

Fixed fixed_exp(Fixed x) {
  // Largest input whose result still fits in Q31.32.
  constexpr std::int64_t kMaxInput = static_cast<std::int64_t>(21.0 * static_cast<double>(Fixed::kOne));
  if (x.raw() > kMaxInput) return Fixed::from_raw(std::numeric_limits<std::int64_t>::max());

  // t = x * log2(e) in Q.32, then t = k + f with f in [0, 1).
  const i128 t = shift_round(static_cast<i128>(x.raw()) * kLog2eQ62, 62);
  const i128 k = t >> Fixed::kFracBits;
  const i128 f32 = t - (k << Fixed::kFracBits);
  if (k < -64) return Fixed::from_raw(0);

  const u128 f = static_cast<u128>(f32) << (kMantBits - Fixed::kFracBits);
  u128 p = kC3;
  p = kC2 + mul_mant(p, f);
  p = kC1 + mul_mant(p, f);
  p = kMantOne + mul_mant(p, f);

  // result = p * 2^k, p in Q.60, result in Q.32.
  const int shift = kMantBits - Fixed::kFracBits - static_cast<int>(k);
  return Fixed::from_raw(saturate(shift_round(static_cast<i128>(p), shift)));
}

Fixed fixed_recip(Fixed x) {
  if (x.raw() <= 0) throw DomainError("fixed_recip: input must be positive, got " + std::to_string(x.to_double()));
  const auto r = static_cast<std::uint64_t>(x.raw());
  const int p = msb(r);
  // m = r / 2^(p+1) in [0.5, 1), as Q.60.
  const u128 m = static_cast<u128>(shift_round(static_cast<i128>(r), p + 1 - kMantBits));
  const std::size_t idx = static_cast<std::size_t>((m >> (kMantBits - 7)) & (kSeedEntries - 1));
  u128 y = kRecipSeeds[idx];
  const u128 two = u128{2} << kMantBits;
  for (int i = 0; i < 2; ++i) y = mul_mant(y, two - mul_mant(m, y));
  // 1/x = (1/m) * 2^(31 - p)  =>  raw = y * 2^(31 - p + 32 - 60)
  const int shift = kMantBits - Fixed::kFracBits - (31 - p);
  return Fixed::from_raw(saturate(shift_round(static_cast<i128>(y), shift)));
}

Fixed fixed_rsqrt(Fixed x) {
  if (x.raw() <= 0) throw DomainError("fixed_rsqrt: input must be positive, got " + std::to_string(x.to_double()));
  const auto r = static_cast<std::uint64_t>(x.raw());
  const int p = msb(r);
  // x = m * 2^e with e even and m in [0.25, 1).
  int e = p + 1 - Fixed::kFracBits;
  if (e & 1) ++e;
  const u128 m = static_cast<u128>(shift_round(static_cast<i128>(r), e + Fixed::kFracBits - kMantBits));
  const u128 quarter = u128{1} << (kMantBits - 2);
  std::size_t idx = static_cast<std::size_t>(((m - quarter) * kSeedEntries) / (3 * quarter));
  idx = std::min(idx, kSeedEntries - 1);
  u128 y = kRsqrtSeeds[idx];
  const u128 three = u128{3} << kMantBits;
  for (int i = 0; i < 2; ++i) {
    const u128 my2 = mul_mant(m, mul_mant(y, y));
    y = mul_mant(y, three - my2) >> 1;
  }
  // 1/sqrt(x) = y * 2^(-e/2)
  const int shift = kMantBits - Fixed::kFracBits + e / 2;
  return Fixed::from_raw(saturate(shift_round(static_cast<i128>(y), shift)));
}

std::vector<Fixed> fixed_softmax(std::span<const Fixed> a) {
  if (a.empty()) throw ShapeError("fixed_softmax: empty input");
  const Fixed max = *std::max_element(a.begin(), a.end());
  std::vector<Fixed> e(a.size());
  i128 sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e[i] = fixed_exp(a[i] - max);
    sum += e[i].raw();
  }
  // sum >= 1 because the max element contributes exp(0) == 1.
  const Fixed inv = fixed_recip(Fixed::from_raw(saturate(sum)));
  for (auto& v : e) v = v * inv;
  return e;
}

Vec fixed_softmax(std::span<const double> a) {
  std::vector<Fixed> in(a.size());
  std::transform(a.begin(), a.end(), in.begin(), Fixed::from_double);
  const auto out = fixed_softmax(std::span<const Fixed>(in));
  Vec result(out.size());
  std::transform(out.begin(), out.end(), result.begin(), [](Fixed f) { return f.to_double(); });
  return result;
}

Vec fixed_rmsnorm(std::span<const double> x, std::span<const double> gain, double eps) {
  if (x.size() != gain.size()) throw ShapeError("fixed_rmsnorm: gain length mismatch");
  if (x.empty()) return {};
  std::vector<Fixed> xs(x.size());
  std::transform(x.begin(), x.end(), xs.begin(), Fixed::from_double);
  i128 sum_sq = 0;
  for (Fixed v : xs) sum_sq += static_cast<i128>(v.raw()) * v.raw();
  // mean in Q.32: sum_sq is Q.64, divide by n with rounding.
  const i128 n = static_cast<i128>(x.size());
  const i128 mean64 = (sum_sq + n / 2) / n;
  const i128 mean = shift_round(mean64, Fixed::kFracBits);
  const Fixed denom = Fixed::from_raw(saturate(mean)) + Fixed::from_double(eps);
  const Fixed inv = fixed_rsqrt(denom);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (xs[i] * inv * Fixed::from_double(gain[i])).to_double();
  return out;
}

}  // namespace ptx
