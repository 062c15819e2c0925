#include "edh/nn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace edh::nn {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

AdamW::AdamW(ParamSet& params, AdamWOptions options) : params_(params), options_(options) {
  for (const auto& [name, t] : params_.items()) {
    m_.push_back(Matrix::Zero(t.rows(), t.cols()));
    v_.push_back(Matrix::Zero(t.rows(), t.cols()));
    decay_.push_back(!(ends_with(name, ".bias") || ends_with(name, ".gamma") || ends_with(name, ".beta")));
  }
}

double AdamW::step(double lr) {
  auto& items = params_.items();
  double sq = 0.0;
  for (const auto& [name, t] : items) {
    if (t.has_grad()) sq += t.node()->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  const double clip = (options_.clip_norm > 0.0 && norm > options_.clip_norm) ? options_.clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor t = items[i].second;
    Matrix& w = t.mutable_value();
    if (decay_[i] && options_.weight_decay > 0.0) w *= (1.0 - lr * options_.weight_decay);
    if (!t.has_grad()) continue;
    const Matrix g = t.node()->grad * clip;
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g.cwiseProduct(g);
    w.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + options_.eps);
    t.zero_grad();
  }
  return norm;
}

double LinearSchedule::at(long step) const {
  if (warmup_steps > 0 && step < warmup_steps) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  const long span = std::max<long>(1, total_steps - warmup_steps);
  const double progress = std::clamp(static_cast<double>(step - warmup_steps) / static_cast<double>(span), 0.0, 1.0);
  return base_lr * (1.0 - progress * (1.0 - final_fraction));
}

}  // namespace edh::nn
