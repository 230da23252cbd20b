#include "ptx/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ptx/error.hpp"
#include "ptx/numerics.hpp"

namespace ptx {

RefAttentionBlock::RefAttentionBlock(const AttentionWeights& weights, const ModelConfig& config, Kernels kernels)
    : weights_(&weights), config_(config), kernels_(kernels) {
  config_.validate();
}

Vec RefAttentionBlock::step(std::span<const double> x) {
  if (x.size() != config_.dim) throw ShapeError("RefAttentionBlock: input length differs from dim");
  const QkvProjection qkv = project_qkv(*weights_, x, kernels_);
  keys_.push_back(qkv.k);
  values_.push_back(qkv.v);

  const std::size_t t = keys_.size() - 1;
  const std::size_t first = t + 1 > config_.window ? t + 1 - config_.window : 0;
  const std::size_t dh = config_.head_dim();
  const double scale = config_.scaled_attention ? 1.0 / std::sqrt(static_cast<double>(dh)) : 1.0;

  Vec concat(config_.dim, 0.0);
  last_probs_.assign(config_.heads, {});
  for (std::size_t h = 0; h < config_.heads; ++h) {
    const std::size_t off = h * dh;
    const auto q = std::span<const double>(qkv.q).subspan(off, dh);
    Vec scores;
    for (std::size_t j = first; j <= t; ++j) {
      scores.push_back(dot(q, std::span<const double>(keys_[j]).subspan(off, dh)) * scale);
    }
    const Vec p = kernels_.attention_probs(scores);
    Vec y(dh, 0.0);
    for (std::size_t j = first; j <= t; ++j) {
      const double pj = p[j - first];
      for (std::size_t i = 0; i < dh; ++i) y[i] += pj * values_[j][off + i];
    }
    y = kernels_.activation(std::move(y));
    std::copy(y.begin(), y.end(), concat.begin() + static_cast<std::ptrdiff_t>(off));
    last_probs_[h] = p;
  }
  return kernels_.activation(add(vmm(weights_->wo, concat), weights_->bo));
}

Vec mlp_step(const MlpWeights& block, std::span<const double> x, const Kernels& kernels) {
  if (x.size() != block.w1.cols()) throw ShapeError("mlp_step: input length differs from dim");
  const Vec xn = kernels.norm(x, block.norm_gain);
  const Vec hidden = kernels.activation(relu(vmm(block.w1, xn)));
  return kernels.activation(add(vmm(block.w2, hidden), block.b2));
}

namespace {

Mat rows_to_mat(const std::vector<Vec>& rows, std::size_t cols) {
  Mat m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ShapeError("forward_parallel: token width differs from dim");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

// Row-wise application of a vector kernel to a T x D matrix.
template <class F>
Mat map_rows(const Mat& in, std::size_t out_cols, F&& f) {
  Mat out(in.rows(), out_cols);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const Vec v = f(in.row(r));
    std::copy(v.begin(), v.end(), out.row(r).begin());
  }
  return out;
}

Mat attention_parallel(const AttentionWeights& w, const ModelConfig& c, const Mat& x, const Kernels& kernels) {
  const std::size_t T = x.rows();
  const std::size_t dh = c.head_dim();
  const double scale = c.scaled_attention ? 1.0 / std::sqrt(static_cast<double>(dh)) : 1.0;

  const Mat xn = map_rows(x, c.dim, [&](std::span<const double> r) { return kernels.norm(r, w.norm_gain); });
  const Mat q = map_rows(matmul_transposed(xn, w.wq), c.dim, [&](std::span<const double> r) { return kernels.activation(Vec(r.begin(), r.end())); });
  const Mat k = map_rows(matmul_transposed(xn, w.wk), c.dim, [&](std::span<const double> r) { return kernels.key(Vec(r.begin(), r.end())); });
  const Mat v = map_rows(matmul_transposed(xn, w.wv), c.dim, [&](std::span<const double> r) { return kernels.value(Vec(r.begin(), r.end())); });

  Mat y(T, c.dim);
  for (std::size_t h = 0; h < c.heads; ++h) {
    const std::size_t off = h * dh;
    // scores(i, j) = q_i . k_j for the head's slice; entries outside the mask are never read.
    Mat scores(T, T);
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t j = 0; j < T; ++j)
        scores(i, j) = dot(q.row(i).subspan(off, dh), k.row(j).subspan(off, dh)) * scale;

    for (std::size_t i = 0; i < T; ++i) {
      const std::size_t first = i + 1 > c.window ? i + 1 - c.window : 0;
      const auto allowed = scores.row(i).subspan(first, i + 1 - first);
      const Vec p = kernels.attention_probs(allowed);
      Vec yi(dh, 0.0);
      for (std::size_t j = first; j <= i; ++j)
        for (std::size_t d = 0; d < dh; ++d) yi[d] += p[j - first] * v(j, off + d);
      yi = kernels.activation(std::move(yi));
      std::copy(yi.begin(), yi.end(), y.row(i).begin() + static_cast<std::ptrdiff_t>(off));
    }
  }
  const Mat z = matmul_transposed(y, w.wo);
  return map_rows(z, c.dim, [&](std::span<const double> r) { return kernels.activation(add(r, w.bo)); });
}

}  // namespace

std::vector<Vec> forward_parallel(const Model& model, const std::vector<Vec>& inputs, const Kernels& kernels) {
  const auto& c = model.config;
  if (inputs.size() > c.max_seq_len) {
    throw std::length_error("forward_parallel: " + std::to_string(inputs.size()) + " tokens exceed max_seq_len " +
                            std::to_string(c.max_seq_len));
  }
  if (inputs.empty()) return {};
  Mat x = rows_to_mat(inputs, c.dim);
  for (const auto& layer : model.layers) {
    const Mat attn = attention_parallel(layer.attn, c, x, kernels);
    Mat h(x.rows(), c.dim);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const Vec hr = kernels.activation(add(x.row(r), attn.row(r)));
      std::copy(hr.begin(), hr.end(), h.row(r).begin());
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const Vec out = kernels.activation(add(h.row(r), mlp_step(layer.mlp, h.row(r), kernels)));
      std::copy(out.begin(), out.end(), x.row(r).begin());
    }
  }
  std::vector<Vec> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r].assign(x.row(r).begin(), x.row(r).end());
  return out;
}

}  // namespace ptx
