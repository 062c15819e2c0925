#pragma once

// Minimal reverse-mode automatic differentiation over dense 2-D matrices.
//
// Every value is a row-major matrix of doubles. Operations record a closure
// that pushes the output gradient back into their inputs; `Tensor::backward`
// replays those closures in reverse topological order. Recording is skipped
// when no input requires a gradient or inside a `NoGradGuard`.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace edh {
class Rng;
}

namespace edh::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// true = the query row may attend to the key column.
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Matrix&)> backward_fn;

  void add_grad(const Matrix& g);
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  // Zero matrix of the value's shape when no gradient has arrived.
  Matrix grad() const;
  bool has_grad() const { return node_->grad.size() != 0; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  double item() const;

  void zero_grad();
  // Seeds d(self)/d(self) = 1; self must be 1x1.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Tensor constant(Matrix value);
Tensor zeros(Eigen::Index rows, Eigen::Index cols);

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// a [r x c] + row [1 x c] broadcast over rows
Tensor add_row(const Tensor& a, const Tensor& row);
// a [r x c] scaled per row by col [r x 1]
Tensor mul_col(const Tensor& a, const Tensor& col);
// alpha * a + beta
Tensor affine(const Tensor& a, double alpha, double beta = 0.0);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Row-wise softmax restricted to columns where mask is true. Rows with no
// allowed column produce all zeros.
Tensor masked_softmax(const Tensor& scores, const Mask& mask);

Tensor dropout(const Tensor& x, double p, Rng& rng);

// Row i of the result is row indices[i] of table.
Tensor gather_rows(const Tensor& table, std::span<const int> indices);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);
// Row-major reinterpretation; rows * cols must match.
Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols);

// [r x c] -> [1 x c]
Tensor mean_rows(const Tensor& a);
// [1 x c] -> [n x c]
Tensor broadcast_rows(const Tensor& row, Eigen::Index n);
Tensor sum_all(const Tensor& a);

// Mean negative log-likelihood over rows whose target is >= 0; rows with a
// negative target are ignored. Returns 0 when every row is ignored.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }

// Plain helpers (no graph).
Matrix softmax_rows(const Matrix& logits);
int argmax_row(const Matrix& m, Eigen::Index row);

}  // namespace edh::nn
