#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ptx/tensor.hpp"

namespace ptx {

/// Integer code format with a power-of-two scale: value = code * 2^exponent.
struct QuantSpec {
  int bits = 8;
  bool is_signed = true;
  int exponent = 0;

  double scale() const noexcept;
  std::int64_t min_code() const noexcept;
  std::int64_t max_code() const noexcept;
  /// Throws std::invalid_argument unless 2 <= bits <= 32.
  void validate() const;

  bool operator==(const QuantSpec&) const = default;
};

struct QuantizedTensor {
  std::vector<std::int64_t> codes;
  QuantSpec spec;
  std::vector<std::size_t> shape;
  /// Number of inputs that were clamped to the representable range.
  std::size_t saturated = 0;

  Vec dequantize() const;
};

/// Round to nearest, ties to even.
double round_half_even(double x) noexcept;

std::int64_t quantize_value(double x, const QuantSpec& spec, bool* saturated = nullptr);
/// Like quantize_value but restricted to even codes.
std::int64_t quantize_value_even(double x, const QuantSpec& spec, bool* saturated = nullptr);

QuantizedTensor quantize(std::span<const double> x, const QuantSpec& spec);
QuantizedTensor quantize(const Mat& m, const QuantSpec& spec);
Vec dequantize(const QuantizedTensor& t);

/// Smallest exponent e such that max_abs <= max_code * 2^e. Returns 0 for max_abs == 0.
int covering_exponent(double max_abs, int bits, bool is_signed);

/// Round-trip through the code domain: dequantize(quantize(x)).
double snap(double x, const QuantSpec& spec) noexcept;
double snap_even(double x, const QuantSpec& spec) noexcept;

}  // namespace ptx
