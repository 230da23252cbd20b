#include "ptx/quant.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ptx {

double QuantSpec::scale() const noexcept { return std::ldexp(1.0, exponent); }

std::int64_t QuantSpec::min_code() const noexcept {
  return is_signed ? -(std::int64_t{1} << (bits - 1)) : 0;
}

std::int64_t QuantSpec::max_code() const noexcept {
  return is_signed ? (std::int64_t{1} << (bits - 1)) - 1 : (std::int64_t{1} << bits) - 1;
}

void QuantSpec::validate() const {
  if (bits < 2 || bits > 32) {
    throw std::invalid_argument("QuantSpec: bitwidth " + std::to_string(bits) + " outside [2, 32]");
  }
  if (exponent < -60 || exponent > 60) {
    throw std::invalid_argument("QuantSpec: scale exponent " + std::to_string(exponent) + " out of range");
  }
}

double round_half_even(double x) noexcept {
  // nearbyint honours the current rounding mode; FE_TONEAREST is ties-to-even.
  const int previous = std::fegetround();
  if (previous == FE_TONEAREST) return std::nearbyint(x);
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(x);
  std::fesetround(previous);
  return r;
}

namespace {

std::int64_t clamp_code(double scaled, std::int64_t lo, std::int64_t hi, bool* saturated) {
  if (std::isnan(scaled)) {
    if (saturated) *saturated = true;
    return 0;
  }
  const bool low = scaled < static_cast<double>(lo);
  const bool high = scaled > static_cast<double>(hi);
  if (saturated) *saturated = low || high;
  if (low) return lo;
  if (high) return hi;
  return static_cast<std::int64_t>(scaled);
}

}  // namespace

std::int64_t quantize_value(double x, const QuantSpec& spec, bool* saturated) {
  const double scaled = round_half_even(std::ldexp(x, -spec.exponent));
  return clamp_code(scaled, spec.min_code(), spec.max_code(), saturated);
}

std::int64_t quantize_value_even(double x, const QuantSpec& spec, bool* saturated) {
  const double scaled = 2.0 * round_half_even(std::ldexp(x, -spec.exponent - 1));
  const std::int64_t lo = spec.min_code() + (spec.min_code() & 1);
  const std::int64_t hi = spec.max_code() - (spec.max_code() & 1);
  return clamp_code(scaled, lo, hi, saturated);
}

QuantizedTensor quantize(std::span<const double> x, const QuantSpec& spec) {
  spec.validate();
  QuantizedTensor out;
  out.spec = spec;
  out.shape = {x.size()};
  out.codes.reserve(x.size());
  for (double v : x) {
    bool sat = false;
    out.codes.push_back(quantize_value(v, spec, &sat));
    out.saturated += sat ? 1 : 0;
  }
  return out;
}

QuantizedTensor quantize(const Mat& m, const QuantSpec& spec) {
  QuantizedTensor out = quantize(m.values(), spec);
  out.shape = {m.rows(), m.cols()};
  return out;
}

Vec QuantizedTensor::dequantize() const {
  Vec out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = std::ldexp(static_cast<double>(codes[i]), spec.exponent);
  return out;
}

Vec dequantize(const QuantizedTensor& t) { return t.dequantize(); }

int covering_exponent(double max_abs, int bits, bool is_signed) {
  if (!(max_abs > 0.0)) return 0;
  const QuantSpec probe{bits, is_signed, 0};
  const double max_code = static_cast<double>(probe.max_code());
  int e = static_cast<int>(std::ceil(std::log2(max_abs / max_code)));
  // log2 can be off by one ulp around exact powers of two.
  while (std::ldexp(max_code, e - 1) >= max_abs) --e;
  while (std::ldexp(max_code, e) < max_abs) ++e;
  return e;
}

double snap(double x, const QuantSpec& spec) noexcept {
  return std::ldexp(static_cast<double>(quantize_value(x, spec)), spec.exponent);
}

double snap_even(double x, const QuantSpec& spec) noexcept {
  return std::ldexp(static_cast<double>(quantize_value_even(x, spec)), spec.exponent);
}

}  // namespace ptx
