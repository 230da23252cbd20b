#include "ptx/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptx/error.hpp"

namespace ptx {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

Vec vmm(const Mat& m, std::span<const double> x) {
  require_same_length(m.cols(), x.size(), "vmm");
  Vec out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

Vec rmsnorm(std::span<const double> x, std::span<const double> gain, double eps) {
  require_same_length(x.size(), gain.size(), "rmsnorm");
  if (!(eps > 0.0)) throw DomainError("rmsnorm: eps must be positive");
  if (x.empty()) return {};
  double sum_sq = 0.0;
  for (double v : x) sum_sq += v * v;
  const double inv = 1.0 / std::sqrt(sum_sq / static_cast<double>(x.size()) + eps);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gain[i] * x[i] * inv;
  return out;
}

Vec softmax(std::span<const double> a) {
  if (a.empty()) throw ShapeError("softmax: empty input");
  const double max = *std::max_element(a.begin(), a.end());
  Vec out(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = std::exp(a[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Vec relu(std::span<const double> x) {
  Vec out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Vec add(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "add");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Mat matmul_transposed(const Mat& a, const Mat& b) {
  require_same_length(a.cols(), b.cols(), "matmul_transposed");
  Mat out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

}  // namespace ptx
