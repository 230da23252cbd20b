#include "ptx/kernels.hpp"

#include <stdexcept>

#include "ptx/fixed_point.hpp"

namespace ptx {

void QuantConfig::validate() const {
  if (matrix_bits < 2 || matrix_bits > 32 || vector_bits < 2 || vector_bits > 32) {
    throw std::invalid_argument("QuantConfig: tensor bitwidths must lie in [2, 32]");
  }
  activation.validate();
  keys.validate();
  values.validate();
  probs.validate();
  traces.validate();
  if (traces.is_signed) throw std::invalid_argument("QuantConfig: traces must be unsigned");
  if (!keys.is_signed || !values.is_signed) throw std::invalid_argument("QuantConfig: cache formats must be signed");
}

Kernels::Kernels(Precision precision, QuantConfig quant, double float_eps)
    : precision_(precision), quant_(quant), eps_(float_eps) {
  quant_.validate();
}

Vec Kernels::norm(std::span<const double> x, std::span<const double> gain) const {
  if (!quantized()) return rmsnorm(x, gain, eps_);
  return activation(fixed_rmsnorm(x, gain, quant_.activation.scale()));
}

Vec Kernels::attention_probs(std::span<const double> scores) const {
  if (!quantized()) return softmax(scores);
  Vec p = fixed_softmax(scores);
  for (double& v : p) v = snap(v, quant_.probs);
  return p;
}

Vec Kernels::activation(Vec v) const {
  if (quantized()) {
    for (double& x : v) x = snap(x, quant_.activation);
  }
  return v;
}

Vec Kernels::key(Vec v) const {
  if (quantized()) {
    for (double& x : v) x = snap_even(x, quant_.keys);
  }
  return v;
}

Vec Kernels::value(Vec v) const {
  if (quantized()) {
    for (double& x : v) x = snap(x, quant_.values);
  }
  return v;
}

}  // namespace ptx
