#pragma once

// Straightforward re-derivations of the model math used as test oracles.
// Everything here recomputes from scratch with plain loops and long double
// accumulation; nothing calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ptx/model.hpp"

namespace oracle {

using ptx::Mat;
using ptx::Vec;

inline Vec matvec(const Mat& m, const Vec& x) {
  Vec out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    long double acc = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += static_cast<long double>(m(r, c)) * x[c];
    out[r] = static_cast<double>(acc);
  }
  return out;
}

inline Vec rmsnorm(const Vec& x, const Vec& gain, double eps) {
  long double ss = 0;
  for (double v : x) ss += static_cast<long double>(v) * v;
  const long double r = std::sqrt(ss / x.size() + eps);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>(gain[i] * x[i] / r);
  return out;
}

inline Vec softmax(const Vec& a) {
  const double m = *std::max_element(a.begin(), a.end());
  long double sum = 0;
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::exp(static_cast<long double>(a[i] - m));
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = static_cast<double>(std::exp(static_cast<long double>(a[i] - m)) / sum);
  return out;
}

inline Vec plus(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

/// Attention output z_t of one block for token t given the block inputs of
/// every token so far; only tokens first..t are attended to. Keys and values
/// are recomputed from the inputs, there is no cache.
inline Vec attention(const ptx::AttentionWeights& w, const ptx::ModelConfig& c, const std::vector<Vec>& xs,
                     std::size_t first, std::size_t t) {
  const std::size_t dh = c.dim / c.heads;
  const double scale = c.scaled_attention ? 1.0 / std::sqrt(static_cast<double>(dh)) : 1.0;
  const Vec q = matvec(w.wq, rmsnorm(xs[t], w.norm_gain, c.rms_eps));
  std::vector<Vec> ks, vs;
  for (std::size_t s = first; s <= t; ++s) {
    const Vec n = rmsnorm(xs[s], w.norm_gain, c.rms_eps);
    ks.push_back(matvec(w.wk, n));
    vs.push_back(matvec(w.wv, n));
  }
  Vec concat(c.dim, 0.0);
  for (std::size_t h = 0; h < c.heads; ++h) {
    Vec scores;
    for (const auto& k : ks) {
      long double acc = 0;
      for (std::size_t i = h * dh; i < (h + 1) * dh; ++i) acc += static_cast<long double>(q[i]) * k[i];
      scores.push_back(static_cast<double>(acc) * scale);
    }
    const Vec p = softmax(scores);
    for (std::size_t i = h * dh; i < (h + 1) * dh; ++i) {
      long double acc = 0;
      for (std::size_t s = 0; s < vs.size(); ++s) acc += static_cast<long double>(p[s]) * vs[s][i];
      concat[i] = static_cast<double>(acc);
    }
  }
  return plus(matvec(w.wo, concat), w.bo);
}

inline Vec mlp(const ptx::MlpWeights& w, const Vec& x, double eps) {
  Vec hidden = matvec(w.w1, rmsnorm(x, w.norm_gain, eps));
  for (double& v : hidden) v = std::max(v, 0.0);
  return plus(matvec(w.w2, hidden), w.b2);
}

/// Full decoder stack over a sequence, float semantics, sliding window.
inline std::vector<Vec> decoder(const ptx::Model& m, const std::vector<Vec>& inputs) {
  const auto& c = m.config;
  std::vector<Vec> xs = inputs;
  for (const auto& layer : m.layers) {
    std::vector<Vec> next;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const std::size_t first = t + 1 > c.window ? t + 1 - c.window : 0;
      const Vec h = plus(xs[t], attention(layer.attn, c, xs, first, t));
      next.push_back(plus(h, mlp(layer.mlp, h, c.rms_eps)));
    }
    xs = std::move(next);
  }
  return xs;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double d = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_abs_diff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double d = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, max_abs_diff(a[i], b[i]));
  return d;
}

/// Even code of the keys grid: nearest even multiple of the scale, ties to
/// even multiples of 4, clamped to [min_code, max_code - 1].
inline std::int64_t even_key_code(double k, const ptx::QuantSpec& spec) {
  const double half = std::ldexp(k, -spec.exponent) / 2;
  double r = std::nearbyint(half);  // default rounding mode is ties-to-even
  const double lo = static_cast<double>(spec.min_code()) / 2;
  const double hi = static_cast<double>(spec.max_code() - 1) / 2;
  r = std::clamp(r, lo, hi);
  return static_cast<std::int64_t>(r) * 2;
}

inline std::int64_t code(double v, const ptx::QuantSpec& spec) {
  const double r = std::nearbyint(std::ldexp(v, -spec.exponent));
  return static_cast<std::int64_t>(
      std::clamp(r, static_cast<double>(spec.min_code()), static_cast<double>(spec.max_code())));
}

}  // namespace oracle
