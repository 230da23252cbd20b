#pragma once

#include <span>

#include "ptx/tensor.hpp"

namespace ptx {

inline constexpr double kDefaultRmsEps = 1e-6;

/// out = m * x. Throws ShapeError unless m.cols() == x.size().
Vec vmm(const Mat& m, std::span<const double> x);

/// out[i] = gain[i] * x[i] / sqrt(mean(x^2) + eps)
Vec rmsnorm(std::span<const double> x, std::span<const double> gain, double eps = kDefaultRmsEps);

/// Max-subtracted softmax. Throws ShapeError on empty input.
Vec softmax(std::span<const double> a);

Vec relu(std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);

/// Element-wise a + b.
Vec add(std::span<const double> a, std::span<const double> b);

/// a * b^T, i.e. out(i, j) = dot(a.row(i), b.row(j)).
Mat matmul_transposed(const Mat& a, const Mat& b);

}  // namespace ptx
