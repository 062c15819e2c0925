#pragma once

// Oracle checks for the MAF infusion and fusion, shared by the unit suite and
// the acceptance runner.

#include <cmath>
#include <vector>

#include "agent_checks.hpp"
#include "edh/maf/maf.hpp"
#include "gradcheck.hpp"

namespace edh::testing {

inline nn::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

inline nn::Matrix naive_matmul(const nn::Matrix& a, const nn::Matrix& b) {
  nn::Matrix out = nn::Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

// (1 - l) X + l (C' U), C' = C or its mean row repeated n times.
inline nn::Matrix naive_infuse(const nn::Matrix& x, const nn::Matrix& c, const nn::Matrix& u,
                               const nn::Matrix& raw_lambda) {
  const Eigen::Index n = x.rows();
  nn::Matrix cn(n, c.cols());
  if (c.rows() == n) {
    cn = c;
  } else {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < c.rows(); ++i) s += c(i, j);
      for (Eigen::Index i = 0; i < n; ++i) cn(i, j) = s / static_cast<double>(c.rows());
    }
  }
  const nn::Matrix cu = naive_matmul(cn, u);
  nn::Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = 1.0 / (1.0 + std::exp(-raw_lambda(i, 0)));
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(i, j) = (1.0 - l) * x(i, j) + l * cu(i, j);
  }
  return out;
}

inline double max_abs_diff(const nn::Matrix& a, const nn::Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

struct MafOracleResult {
  double infuse_error = 0.0;  // max |mca2_infuse - naive| over trials
  double fuse_error = 0.0;    // max |gif_fuse - naive| over trials
  bool lambda_zero_exact = true;
  bool lambda_one_exact = true;
  bool zero_gates_exact = true;
  bool cancellation_exact = true;
  int trials = 0;
};

inline MafOracleResult check_maf_oracles(std::uint64_t seed, int trials) {
  Rng rng(seed);
  MafOracleResult r;
  for (int t = 0; t < trials; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(6));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(6));
    const Eigen::Index dc = 1 + static_cast<Eigen::Index>(rng.below(6));
    // The first trial is the 3x4 / 2x5 shape at lambda = 0.5; later ones mix
    // pooled (c != n) and row-aligned (c == n) contexts.
    const Eigen::Index rows = t == 0 ? 3 : n, width = t == 0 ? 4 : d, cw = t == 0 ? 5 : dc;
    const Eigen::Index c = t == 0 ? 2 : (rng.bernoulli(0.5) ? rows : 1 + static_cast<Eigen::Index>(rng.below(5)));
    const nn::Matrix k = random_matrix(rows, width, rng), v = random_matrix(rows, width, rng);
    const nn::Matrix ctx = random_matrix(c, cw, rng);
    maf::MCA2Params p;
    p.lambda_k = nn::constant(t == 0 ? nn::Matrix::Zero(rows, 1) : random_matrix(rows, 1, rng, 3.0));
    p.lambda_v = nn::constant(t == 0 ? nn::Matrix::Zero(rows, 1) : random_matrix(rows, 1, rng, 3.0));
    p.u_k = nn::constant(random_matrix(cw, width, rng));
    p.u_v = nn::constant(random_matrix(cw, width, rng));
    const maf::InfusedKV kv = maf::mca2_infuse(nn::constant(k), nn::constant(v), nn::constant(ctx), p);
    r.infuse_error = std::max(r.infuse_error,
                              max_abs_diff(kv.k_hat.value(), naive_infuse(k, ctx, p.u_k.value(), p.lambda_k.value())));
    r.infuse_error = std::max(r.infuse_error,
                              max_abs_diff(kv.v_hat.value(), naive_infuse(v, ctx, p.u_v.value(), p.lambda_v.value())));

    // Degenerate lambdas with a row-aligned context.
    const nn::Matrix aligned = random_matrix(rows, cw, rng);
    maf::MCA2Params lo = p, hi = p;
    lo.lambda_k = lo.lambda_v = nn::constant(nn::Matrix::Constant(rows, 1, -1e3));
    hi.lambda_k = hi.lambda_v = nn::constant(nn::Matrix::Constant(rows, 1, 1e3));
    const maf::InfusedKV z = maf::mca2_infuse(nn::constant(k), nn::constant(v), nn::constant(aligned), lo);
    if (z.k_hat.value() != k || z.v_hat.value() != v) r.lambda_zero_exact = false;
    const maf::InfusedKV o = maf::mca2_infuse(nn::constant(k), nn::constant(v), nn::constant(aligned), hi);
    if (o.k_hat.value() != nn::matmul(nn::constant(aligned), p.u_k).value() ||
        o.v_hat.value() != nn::matmul(nn::constant(aligned), p.u_v).value()) {
      r.lambda_one_exact = false;
    }

    // Fusion.
    const nn::Matrix h = random_matrix(rows, width, rng);
    const int streams = 1 + static_cast<int>(rng.below(3));
    std::vector<nn::Tensor> hs, gs;
    nn::Matrix expect = h;
    for (int m = 0; m < streams; ++m) {
      hs.push_back(nn::constant(random_matrix(rows, width, rng)));
      nn::Matrix g(rows, width);
      for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform();
      gs.push_back(nn::constant(g));
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < width; ++j) expect(i, j) += g(i, j) * hs.back().value()(i, j);
      }
    }
    r.fuse_error = std::max(r.fuse_error, max_abs_diff(maf::gif_fuse(nn::constant(h), hs, gs).value(), expect));

    std::vector<nn::Tensor> zero_gates;
    for (int m = 0; m < streams; ++m) zero_gates.push_back(nn::sigmoid(nn::constant(nn::Matrix::Constant(rows, width, -1e3))));
    if (maf::gif_fuse(nn::constant(h), hs, zero_gates).value() != h) r.zero_gates_exact = false;
    const nn::Tensor neg[] = {nn::constant(-h)};
    const nn::Tensor one[] = {nn::sigmoid(nn::constant(nn::Matrix::Constant(rows, width, 1e3)))};
    if (!maf::gif_fuse(nn::constant(h), neg, one).value().isZero(0.0)) r.cancellation_exact = false;
    ++r.trials;
  }
  return r;
}

inline maf::MAFConfig tiny_maf_config(std::uint64_t seed = 5) {
  maf::MAFConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.text_layers = 1;
  c.decoder_layers = 1;
  c.dropout = 0.0;
  c.max_dialog_tokens = 6;
  c.max_history = 4;
  c.max_actions = 6;
  c.seed = seed;
  return c;
}

struct MafGradResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t tensors = 0;
};

// Finite differences over every parameter of a d=8 model, with lambdas and
// gates moved off their zero init so both convex-combination terms are live.
inline MafGradResult check_maf_gradients(std::uint64_t seed) {
  const corpus::Vocabularies vocab = small_vocab();
  maf::MAFModel model(tiny_maf_config(seed), vocab);
  Rng rng(seed + 11);
  std::vector<nn::Tensor> wrt;
  for (auto& [name, t] : model.params().items()) {
    if (name.find("lambda") != std::string::npos || name.find("gate") != std::string::npos) {
      nn::Tensor p = t;
      p.mutable_value() = random_matrix(t.rows(), t.cols(), rng, 2.0);
    }
    wrt.push_back(t);
  }
  maf::MAFExample ex;
  ex.input.text = {4, 9, 5, 12};
  ex.input.history = {1, 3, 2};
  ex.input.frames = random_matrix(3, 16 * 49, rng);
  ex.target = {2, 5, 1, model.eos()};
  const nn::Matrix proj = random_matrix(model.config().max_dialog_tokens, model.config().d_model, rng);
  const nn::Context eval;
  auto loss = [&] {
    return model.loss(ex, eval) + nn::sum_all(nn::mul(model.fuse_inputs(ex.input, eval), nn::constant(proj)));
  };
  const GradCheckResult g = grad_check(loss, wrt, 1e-5);
  return {g.max_rel_error, g.checked, wrt.size()};
}

}  // namespace edh::testing
