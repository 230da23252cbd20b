#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "ptx/tensor.hpp"

namespace ptx {

/// Signed Q31.32 fixed-point scalar.
class Fixed {
 public:
  static constexpr int kFracBits = 32;
  static constexpr std::int64_t kOne = std::int64_t{1} << kFracBits;

  constexpr Fixed() = default;
  static constexpr Fixed from_raw(std::int64_t raw) noexcept { return Fixed(raw); }
  /// Round half to even onto the 2^-32 grid, saturating at the representable range.
  static Fixed from_double(double x) noexcept;
  static constexpr Fixed one() noexcept { return Fixed(kOne); }

  constexpr std::int64_t raw() const noexcept { return raw_; }
  double to_double() const noexcept;

  friend constexpr Fixed operator+(Fixed a, Fixed b) noexcept { return Fixed(a.raw_ + b.raw_); }
  friend constexpr Fixed operator-(Fixed a, Fixed b) noexcept { return Fixed(a.raw_ - b.raw_); }
  /// Product rounded half to even, saturating.
  friend Fixed operator*(Fixed a, Fixed b) noexcept;

  constexpr auto operator<=>(const Fixed&) const = default;

 private:
  constexpr explicit Fixed(std::int64_t raw) : raw_(raw) {}
  std::int64_t raw_ = 0;
};

/// Declared operating ranges; the error bound of the kernels below is
/// guaranteed inside these intervals.
struct KernelRange {
  double lo;
  double hi;
};
inline constexpr KernelRange kExpRange{-16.0, 0.0};
inline constexpr KernelRange kRecipRange{0x1p-14, 0x1p14};
inline constexpr KernelRange kRsqrtRange{0x1p-14, 0x1p14};

/// e^x via 2^k * 2^f range reduction and a cubic for 2^f (p(0) == 1 exactly).
Fixed fixed_exp(Fixed x);
/// 1/x via a 64-entry seed table and two Newton steps. Throws DomainError for x <= 0.
Fixed fixed_recip(Fixed x);
/// 1/sqrt(x), same construction as fixed_recip. Throws DomainError for x <= 0.
Fixed fixed_rsqrt(Fixed x);

std::vector<Fixed> fixed_softmax(std::span<const Fixed> a);
/// Convenience overload: converts to Fixed, runs the fixed softmax, converts back.
Vec fixed_softmax(std::span<const double> a);

/// RMSNorm on the fixed-point grid, using fixed_rsqrt for the normalizer.
Vec fixed_rmsnorm(std::span<const double> x, std::span<const double> gain, double eps);

}  // namespace ptx
