#pragma once

// Finite-difference gradient oracle shared by the model test suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "edh/nn/tensor.hpp"

namespace edh::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
}

// Compares d loss / d p for every element of every tensor in `wrt` against
// central differences. `loss` must rebuild the graph from current values.
inline GradCheckResult grad_check(const std::function<nn::Tensor()>& loss, std::vector<nn::Tensor> wrt,
                                  double step = 1e-5) {
  for (auto& t : wrt) t.zero_grad();
  loss().backward();
  std::vector<nn::Matrix> analytic;
  for (auto& t : wrt) analytic.push_back(t.grad());

  GradCheckResult r;
  nn::NoGradGuard guard;
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    nn::Matrix& v = wrt[k].mutable_value();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double orig = v.data()[i];
      v.data()[i] = orig + step;
      const double up = loss().item();
      v.data()[i] = orig - step;
      const double down = loss().item();
      v.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic[k].data()[i], numeric));
      ++r.checked;
    }
  }
  return r;
}

}  // namespace edh::testing
