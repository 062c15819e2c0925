#pragma once

#include <string>
#include <utility>
#include <vector>

#include "edh/nn/tensor.hpp"
#include "edh/util/rng.hpp"

namespace edh::nn {

// Ordered, named collection of trainable leaves. Names are unique and
// hierarchical ("text.layer0.attn.q.weight").
class ParamSet {
 public:
  Tensor add(const std::string& name, Matrix init);
  const std::vector<std::pair<std::string, Tensor>>& items() const { return params_; }
  Tensor* find(const std::string& name);
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
};

// Forward-pass settings shared by every layer.
struct Context {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;

  Tensor drop(const Tensor& x) const;
};

Matrix xavier_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);
Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng);

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [1 x out]

  Linear() = default;
  Linear(ParamSet& params, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);
  Tensor operator()(const Tensor& x) const;
};

struct Embedding {
  Tensor table;  // [count x dim]

  Embedding() = default;
  Embedding(ParamSet& params, const std::string& name, Eigen::Index count, Eigen::Index dim, Rng& rng);
  // Throws IndexError for indices outside the table.
  Tensor operator()(std::span<const int> indices) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(ParamSet& params, const std::string& name, Eigen::Index dim);
  Tensor operator()(const Tensor& x) const;
};

// Scaled dot-product attention over already-projected, head-concatenated
// Q [n x d], K [m x d], V [m x d]. Output is [n x d]; a row whose mask is all
// false comes out zero.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Mask& mask, int heads);

struct MultiHeadAttention {
  Linear q, k, v, out;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParamSet& params, const std::string& name, Eigen::Index dim, int heads, Rng& rng);
  Tensor operator()(const Tensor& query, const Tensor& source, const Mask& mask) const;
};

struct FeedForward {
  Linear in, out;

  FeedForward() = default;
  FeedForward(ParamSet& params, const std::string& name, Eigen::Index dim, Eigen::Index hidden, Rng& rng);
  Tensor operator()(const Tensor& x, const Context& ctx) const;
};

// Post-norm transformer encoder layer.
struct EncoderLayer {
  MultiHeadAttention attn;
  FeedForward ff;
  LayerNorm norm1, norm2;

  EncoderLayer() = default;
  EncoderLayer(ParamSet& params, const std::string& name, Eigen::Index dim, int heads, Eigen::Index hidden, Rng& rng);
  Tensor operator()(const Tensor& x, const Mask& mask, const Context& ctx) const;
};

// Post-norm transformer decoder layer: masked self-attention, attention over
// a memory, feed-forward.
struct DecoderLayer {
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ff;
  LayerNorm norm1, norm2, norm3;

  DecoderLayer() = default;
  DecoderLayer(ParamSet& params, const std::string& name, Eigen::Index dim, int heads, Eigen::Index hidden, Rng& rng);
  Tensor operator()(const Tensor& x, const Tensor& memory, const Mask& self_mask, const Mask& memory_mask,
                    const Context& ctx) const;
};

// Lower-triangular mask: row i sees columns <= i.
Mask causal_mask(Eigen::Index n);
// Every row sees exactly the columns where key_valid is true.
Mask key_mask(Eigen::Index rows, const std::vector<bool>& key_valid);

}  // namespace edh::nn
