#include "edh/nn/layers.hpp"

#include <cmath>

#include "edh/util/error.hpp"

namespace edh::nn {

Tensor ParamSet::add(const std::string& name, Matrix init) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name " + name);
  Tensor t(std::move(init), true);
  params_.emplace_back(name, t);
  return t;
}

Tensor* ParamSet::find(const std::string& name) {
  for (auto& [n, t] : params_) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += static_cast<std::size_t>(t.value().size());
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

Tensor Context::drop(const Tensor& x) const {
  if (!training || dropout <= 0.0 || rng == nullptr) return x;
  return nn::dropout(x, dropout, *rng);
}

Matrix xavier_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_matrix(fan_in, fan_out, limit, rng);
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

Linear::Linear(ParamSet& params, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng)
    : weight(params.add(name + ".weight", xavier_uniform(in, out, rng))),
      bias(params.add(name + ".bias", Matrix::Zero(1, out))) {}

Tensor Linear::operator()(const Tensor& x) const { return add_row(matmul(x, weight), bias); }

Embedding::Embedding(ParamSet& params, const std::string& name, Eigen::Index count, Eigen::Index dim, Rng& rng)
    : table(params.add(name, uniform_matrix(count, dim, std::sqrt(3.0 / static_cast<double>(dim)), rng))) {}

Tensor Embedding::operator()(std::span<const int> indices) const { return gather_rows(table, indices); }

LayerNorm::LayerNorm(ParamSet& params, const std::string& name, Eigen::Index dim)
    : gamma(params.add(name + ".gamma", Matrix::Ones(1, dim))), beta(params.add(name + ".beta", Matrix::Zero(1, dim))) {}

Tensor LayerNorm::operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Mask& mask, int heads) {
  if (q.cols() != k.cols() || k.cols() != v.cols() || k.rows() != v.rows()) {
    throw ShapeMismatch("attention: q/k/v widths or k/v lengths differ");
  }
  if (mask.rows() != q.rows() || mask.cols() != k.rows()) {
    throw ShapeMismatch("attention: mask must be [len(query) x len(source)]");
  }
  if (heads <= 0 || q.cols() % heads != 0) throw ShapeMismatch("attention: width not divisible by heads");
  const Eigen::Index dh = q.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (heads == 1) {
    Tensor p = masked_softmax(affine(matmul_nt(q, k), scale), mask);
    return matmul(p, v);
  }
  std::vector<Tensor> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor p = masked_softmax(affine(matmul_nt(qh, kh), scale), mask);
    outs.push_back(matmul(p, vh));
  }
  return concat_cols(outs);
}

MultiHeadAttention::MultiHeadAttention(ParamSet& params, const std::string& name, Eigen::Index dim, int heads_,
                                       Rng& rng)
    : q(params, name + ".q", dim, dim, rng),
      k(params, name + ".k", dim, dim, rng),
      v(params, name + ".v", dim, dim, rng),
      out(params, name + ".out", dim, dim, rng),
      heads(heads_) {
  if (heads <= 0 || dim % heads != 0) throw ConfigError("model width must be divisible by the head count");
}

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& source, const Mask& mask) const {
  return out(multi_head_attention(q(query), k(source), v(source), mask, heads));
}

FeedForward::FeedForward(ParamSet& params, const std::string& name, Eigen::Index dim, Eigen::Index hidden, Rng& rng)
    : in(params, name + ".in", dim, hidden, rng), out(params, name + ".out", hidden, dim, rng) {}

Tensor FeedForward::operator()(const Tensor& x, const Context& ctx) const { return out(ctx.drop(relu(in(x)))); }

EncoderLayer::EncoderLayer(ParamSet& params, const std::string& name, Eigen::Index dim, int heads, Eigen::Index hidden,
                           Rng& rng)
    : attn(params, name + ".attn", dim, heads, rng),
      ff(params, name + ".ff", dim, hidden, rng),
      norm1(params, name + ".norm1", dim),
      norm2(params, name + ".norm2", dim) {}

Tensor EncoderLayer::operator()(const Tensor& x, const Mask& mask, const Context& ctx) const {
  Tensor h = norm1(x + ctx.drop(attn(x, x, mask)));
  return norm2(h + ctx.drop(ff(h, ctx)));
}

DecoderLayer::DecoderLayer(ParamSet& params, const std::string& name, Eigen::Index dim, int heads, Eigen::Index hidden,
                           Rng& rng)
    : self_attn(params, name + ".self_attn", dim, heads, rng),
      cross_attn(params, name + ".cross_attn", dim, heads, rng),
      ff(params, name + ".ff", dim, hidden, rng),
      norm1(params, name + ".norm1", dim),
      norm2(params, name + ".norm2", dim),
      norm3(params, name + ".norm3", dim) {}

Tensor DecoderLayer::operator()(const Tensor& x, const Tensor& memory, const Mask& self_mask, const Mask& memory_mask,
                                const Context& ctx) const {
  Tensor h = norm1(x + ctx.drop(self_attn(x, x, self_mask)));
  h = norm2(h + ctx.drop(cross_attn(h, memory, memory_mask)));
  return norm3(h + ctx.drop(ff(h, ctx)));
}

Mask causal_mask(Eigen::Index n) {
  Mask m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = j <= i;
  }
  return m;
}

Mask key_mask(Eigen::Index rows, const std::vector<bool>& key_valid) {
  Mask m(rows, static_cast<Eigen::Index>(key_valid.size()));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < key_valid.size(); ++j) m(i, static_cast<Eigen::Index>(j)) = key_valid[j];
  }
  return m;
}

}  // namespace edh::nn
