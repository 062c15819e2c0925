#include "edh/nn/tensor.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include "edh/util/error.hpp"
#include "edh/util/rng.hpp"

namespace edh::nn {

namespace {

thread_local bool g_grad_enabled = true;

void check(bool ok, const char* what) {
  if (!ok) throw ShapeMismatch(what);
}

// Builds the output node; the backward closure is only kept when a gradient
// can flow.
Tensor make(Matrix value, std::vector<const Tensor*> inputs, std::function<void(const Matrix&)> fn) {
  bool grad = g_grad_enabled;
  if (grad) {
    grad = false;
    for (const Tensor* t : inputs) grad = grad || t->requires_grad();
  }
  Tensor out(std::move(value), grad);
  if (grad) {
    Node& n = *out.node();
    for (const Tensor* t : inputs) n.parents.push_back(t->node());
    n.backward_fn = std::move(fn);
  }
  return out;
}

}  // namespace

void Node::add_grad(const Matrix& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
  return node_->grad;
}

double Tensor::item() const {
  check(rows() == 1 && cols() == 1, "item() needs a 1x1 tensor");
  return node_->value(0, 0);
}

void Tensor::zero_grad() { node_->grad.resize(0, 0); }

void Tensor::backward() const {
  check(rows() == 1 && cols() == 1, "backward() needs a scalar root");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->add_grad(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() != 0) n->backward_fn(n->grad);
  }
  // Interior gradients are no longer needed; leaves keep theirs.
  for (Node* n : order) {
    if (n->backward_fn) n->grad.resize(0, 0);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor constant(Matrix value) { return Tensor(std::move(value), false); }

Tensor zeros(Eigen::Index rows, Eigen::Index cols) { return constant(Matrix::Zero(rows, cols)); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return make(a.value() * b.value(), {&a, &b}, [na, nb](const Matrix& g) {
    if (na->requires_grad) na->add_grad(g * nb->value.transpose());
    if (nb->requires_grad) nb->add_grad(na->value.transpose() * g);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return make(a.value() * b.value().transpose(), {&a, &b}, [na, nb](const Matrix& g) {
    if (na->requires_grad) na->add_grad(g * nb->value);
    if (nb->requires_grad) nb->add_grad(g.transpose() * na->value);
  });
}

Tensor transpose(const Tensor& a) {
  Node* na = a.node().get();
  return make(a.value().transpose(), {&a}, [na](const Matrix& g) { na->add_grad(g.transpose()); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return make(a.value() + b.value(), {&a, &b}, [na, nb](const Matrix& g) {
    na->add_grad(g);
    nb->add_grad(g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shapes differ");
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return make(a.value() - b.value(), {&a, &b}, [na, nb](const Matrix& g) {
    na->add_grad(g);
    if (nb->requires_grad) nb->add_grad(-g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shapes differ");
  Node* na = a.node().get();
  Node* nb = b.node().get();
  return make(a.value().cwiseProduct(b.value()), {&a, &b}, [na, nb](const Matrix& g) {
    if (na->requires_grad) na->add_grad(g.cwiseProduct(nb->value));
    if (nb->requires_grad) nb->add_grad(g.cwiseProduct(na->value));
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  check(row.rows() == 1 && row.cols() == a.cols(), "add_row: row shape");
  Node* na = a.node().get();
  Node* nr = row.node().get();
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return make(std::move(out), {&a, &row}, [na, nr](const Matrix& g) {
    na->add_grad(g);
    if (nr->requires_grad) nr->add_grad(g.colwise().sum());
  });
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
  check(col.cols() == 1 && col.rows() == a.rows(), "mul_col: column shape");
  Node* na = a.node().get();
  Node* nc = col.node().get();
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return make(std::move(out), {&a, &col}, [na, nc](const Matrix& g) {
    if (na->requires_grad) {
      Matrix ga = g.array().colwise() * nc->value.col(0).array();
      na->add_grad(ga);
    }
    if (nc->requires_grad) {
      Matrix gc = g.cwiseProduct(na->value).rowwise().sum();
      nc->add_grad(gc);
    }
  });
}

Tensor affine(const Tensor& a, double alpha, double beta) {
  Node* na = a.node().get();
  Matrix out = (alpha * a.value()).array() + beta;
  return make(std::move(out), {&a}, [na, alpha](const Matrix& g) { na->add_grad(alpha * g); });
}

Tensor relu(const Tensor& a) {
  Node* na = a.node().get();
  Matrix out = a.value().cwiseMax(0.0);
  return make(std::move(out), {&a}, [na](const Matrix& g) {
    Matrix ga = (na->value.array() > 0.0).select(g, 0.0);
    na->add_grad(ga);
  });
}

Tensor sigmoid(const Tensor& a) {
  Node* na = a.node().get();
  Matrix out = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
  });
  Matrix y = out;
  return make(std::move(out), {&a}, [na, y](const Matrix& g) {
    Matrix ga = g.array() * y.array() * (1.0 - y.array());
    na->add_grad(ga);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const Eigen::Index n = x.rows();
  const Eigen::Index c = x.cols();
  check(gamma.rows() == 1 && gamma.cols() == c && beta.rows() == 1 && beta.cols() == c, "layer_norm: affine shape");
  Matrix xhat(n, c);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.value().row(i).mean();
    const double var = (x.value().row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.value().row(i).array() - mu) * inv_std(i);
  }
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  Node* nx = x.node().get();
  Node* ng = gamma.node().get();
  Node* nb = beta.node().get();
  return make(std::move(out), {&x, &gamma, &beta}, [nx, ng, nb, xhat, inv_std](const Matrix& g) {
    if (ng->requires_grad) ng->add_grad(g.cwiseProduct(xhat).colwise().sum());
    if (nb->requires_grad) nb->add_grad(g.colwise().sum());
    if (nx->requires_grad) {
      Matrix dxhat = g.array().rowwise() * ng->value.row(0).array();
      Matrix dx(dxhat.rows(), dxhat.cols());
      for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
        const double m1 = dxhat.row(i).mean();
        const double m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
        dx.row(i) = inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
      }
      nx->add_grad(dx);
    }
  });
}

Tensor masked_softmax(const Tensor& scores, const Mask& mask) {
  check(mask.rows() == scores.rows() && mask.cols() == scores.cols(), "masked_softmax: mask shape");
  const Eigen::Index n = scores.rows();
  const Eigen::Index c = scores.cols();
  Matrix p = Matrix::Zero(n, c);
  const Matrix& s = scores.value();
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < c; ++j) {
      if (mask(i, j) && s(i, j) > mx) mx = s(i, j);
    }
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double total = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      if (mask(i, j)) {
        p(i, j) = std::exp(s(i, j) - mx);
        total += p(i, j);
      }
    }
    p.row(i) /= total;
  }
  Node* ns = scores.node().get();
  Matrix probs = p;
  return make(std::move(p), {&scores}, [ns, probs](const Matrix& g) {
    Matrix gs = probs.cwiseProduct(g);
    Eigen::VectorXd dot = gs.rowwise().sum();
    gs -= (probs.array().colwise() * dot.array()).matrix();
    ns->add_grad(gs);
  });
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  Matrix keep(x.rows(), x.cols());
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < keep.size(); ++i) keep.data()[i] = rng.uniform() < p ? 0.0 : scale;
  Node* nx = x.node().get();
  Matrix out = x.value().cwiseProduct(keep);
  return make(std::move(out), {&x}, [nx, keep](const Matrix& g) { nx->add_grad(g.cwiseProduct(keep)); });
}

Tensor gather_rows(const Tensor& table, std::span<const int> indices) {
  const Eigen::Index n = static_cast<Eigen::Index>(indices.size());
  Matrix out(n, table.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int idx = indices[static_cast<std::size_t>(i)];
    if (idx < 0 || idx >= table.rows()) {
      throw IndexError("index " + std::to_string(idx) + " outside table of " + std::to_string(table.rows()) + " rows");
    }
    out.row(i) = table.value().row(idx);
  }
  Node* nt = table.node().get();
  std::vector<int> idx(indices.begin(), indices.end());
  return make(std::move(out), {&table}, [nt, idx](const Matrix& g) {
    Matrix gt = Matrix::Zero(nt->value.rows(), nt->value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) gt.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    nt->add_grad(gt);
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  check(!parts.empty(), "concat_rows: no parts");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const Tensor& t : parts) {
    check(t.cols() == cols, "concat_rows: column counts differ");
    rows += t.rows();
  }
  Matrix out(rows, cols);
  std::vector<const Tensor*> inputs;
  std::vector<Node*> nodes;
  std::vector<Eigen::Index> offsets;
  Eigen::Index r = 0;
  for (const Tensor& t : parts) {
    out.middleRows(r, t.rows()) = t.value();
    inputs.push_back(&t);
    nodes.push_back(t.node().get());
    offsets.push_back(r);
    r += t.rows();
  }
  return make(std::move(out), inputs, [nodes, offsets](const Matrix& g) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i]->requires_grad) nodes[i]->add_grad(g.middleRows(offsets[i], nodes[i]->value.rows()));
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  check(!parts.empty(), "concat_cols: no parts");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts[0].rows();
  for (const Tensor& t : parts) {
    check(t.rows() == rows, "concat_cols: row counts differ");
    cols += t.cols();
  }
  Matrix out(rows, cols);
  std::vector<const Tensor*> inputs;
  std::vector<Node*> nodes;
  std::vector<Eigen::Index> offsets;
  Eigen::Index c = 0;
  for (const Tensor& t : parts) {
    out.middleCols(c, t.cols()) = t.value();
    inputs.push_back(&t);
    nodes.push_back(t.node().get());
    offsets.push_back(c);
    c += t.cols();
  }
  return make(std::move(out), inputs, [nodes, offsets](const Matrix& g) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i]->requires_grad) nodes[i]->add_grad(g.middleCols(offsets[i], nodes[i]->value.cols()));
    }
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  check(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: out of range");
  Node* na = a.node().get();
  return make(a.value().middleRows(start, count), {&a}, [na, start, count](const Matrix& g) {
    Matrix ga = Matrix::Zero(na->value.rows(), na->value.cols());
    ga.middleRows(start, count) = g;
    na->add_grad(ga);
  });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  check(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  Node* na = a.node().get();
  return make(a.value().middleCols(start, count), {&a}, [na, start, count](const Matrix& g) {
    Matrix ga = Matrix::Zero(na->value.rows(), na->value.cols());
    ga.middleCols(start, count) = g;
    na->add_grad(ga);
  });
}

Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols) {
  check(rows * cols == a.rows() * a.cols(), "reshape: element count differs");
  Node* na = a.node().get();
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return make(std::move(out), {&a}, [na](const Matrix& g) {
    Matrix ga = Eigen::Map<const Matrix>(g.data(), na->value.rows(), na->value.cols());
    na->add_grad(ga);
  });
}

Tensor mean_rows(const Tensor& a) {
  check(a.rows() > 0, "mean_rows: empty input");
  Node* na = a.node().get();
  const double n = static_cast<double>(a.rows());
  return make(a.value().colwise().mean(), {&a}, [na, n](const Matrix& g) {
    Matrix ga = g.replicate(na->value.rows(), 1) / n;
    na->add_grad(ga);
  });
}

Tensor broadcast_rows(const Tensor& row, Eigen::Index n) {
  check(row.rows() == 1, "broadcast_rows: expects a single row");
  Node* nr = row.node().get();
  return make(row.value().replicate(n, 1), {&row}, [nr](const Matrix& g) { nr->add_grad(g.colwise().sum()); });
}

Tensor sum_all(const Tensor& a) {
  Node* na = a.node().get();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make(std::move(out), {&a}, [na](const Matrix& g) {
    na->add_grad(Matrix::Constant(na->value.rows(), na->value.cols(), g(0, 0)));
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
  check(static_cast<Eigen::Index>(targets.size()) == logits.rows(), "cross_entropy: one target per row");
  const Eigen::Index k = logits.cols();
  Matrix probs = softmax_rows(logits.value());
  double total = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0) continue;
    if (t >= k) throw IndexError("cross_entropy target " + std::to_string(t) + " >= " + std::to_string(k));
    const auto row = logits.value().row(i);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    total += lse - row(t);
    ++count;
  }
  Matrix out(1, 1);
  out(0, 0) = count > 0 ? total / count : 0.0;
  Node* nl = logits.node().get();
  std::vector<int> tg(targets.begin(), targets.end());
  return make(std::move(out), {&logits}, [nl, probs, tg, count](const Matrix& g) {
    if (count == 0) return;
    Matrix gl = Matrix::Zero(probs.rows(), probs.cols());
    const double scale = g(0, 0) / count;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      const int t = tg[static_cast<std::size_t>(i)];
      if (t < 0) continue;
      gl.row(i) = probs.row(i) * scale;
      gl(i, t) -= scale;
    }
    nl->add_grad(gl);
  });
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

int argmax_row(const Matrix& m, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > m(row, best)) best = static_cast<int>(j);
  }
  return best;
}

}  // namespace edh::nn
