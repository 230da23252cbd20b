#pragma once

#include <span>

#include "ptx/numerics.hpp"
#include "ptx/quant.hpp"
#include "ptx/tensor.hpp"

namespace ptx {

enum class Precision { Float, Quant };

/// Number formats used by the quantized execution mode. Matrices and vectors
/// receive per-tensor exponents at quantization time; the remaining groups
/// carry fixed exponents stored in the model config.
struct QuantConfig {
  int matrix_bits = 8;
  int vector_bits = 16;
  QuantSpec activation{16, true, -8};
  QuantSpec keys{8, true, -4};
  QuantSpec values{8, true, -4};
  QuantSpec probs{16, false, -15};
  QuantSpec traces{8, false, 0};

  void validate() const;
  bool operator==(const QuantConfig&) const = default;
};

/// Nonlinearities and re-quantization points, dispatched on precision. In
/// Float mode every method is the plain double kernel; in Quant mode the
/// fixed-point kernels run and results are snapped to their code grids.
class Kernels {
 public:
  Kernels() = default;
  Kernels(Precision precision, QuantConfig quant, double float_eps = kDefaultRmsEps);

  static Kernels float_mode(double eps = kDefaultRmsEps) { return Kernels(Precision::Float, {}, eps); }

  Precision precision() const noexcept { return precision_; }
  bool quantized() const noexcept { return precision_ == Precision::Quant; }
  const QuantConfig& quant() const noexcept { return quant_; }
  double float_eps() const noexcept { return eps_; }

  Vec norm(std::span<const double> x, std::span<const double> gain) const;
  Vec attention_probs(std::span<const double> scores) const;
  Vec activation(Vec v) const;
  /// Keys go onto the even codes of the keys grid (the trace encoding drops the low bit).
  Vec key(Vec v) const;
  Vec value(Vec v) const;

 private:
  Precision precision_ = Precision::Float;
  QuantConfig quant_{};
  double eps_ = kDefaultRmsEps;
};

}  // namespace ptx
