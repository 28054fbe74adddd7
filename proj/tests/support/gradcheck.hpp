#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "xview/ops.hpp"
#include "xview/tensor.hpp"

namespace xview::testing {

struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;
  double analytic_norm = 0.0;
};

// Compares the tape gradient of `loss_fn` with central differences for every
// tensor in `params` (leaves with requires_grad). Stop-gradient values are
// recorded on the base pass and replayed while perturbing, so the numeric side
// differentiates the same function the tape does.
// Relative error per tensor: |a - n| / max(|a| + |n|, 1e-8) in the 2-norm.
inline std::vector<GradCheckEntry> check_gradients(const std::function<Tensor()>& loss_fn,
                                                   const std::vector<std::pair<std::string, Tensor>>& params,
                                                   double step = 1e-6) {
  std::vector<Tensor> frozen;
  for (const auto& [name, p] : params) Tensor(p).zero_grad();
  {
    ops::StopGradientCapture record(ops::StopGradientCapture::Mode::kRecord, &frozen);
    backward(loss_fn());
  }
  auto eval = [&] {
    ops::StopGradientCapture replay(ops::StopGradientCapture::Mode::kReplay, &frozen);
    NoGradGuard no_grad;
    return loss_fn().item();
  };

  std::vector<GradCheckEntry> out;
  for (const auto& [name, param] : params) {
    Tensor p = param;
    std::vector<double> analytic = p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                                : std::vector<double>(p.numel(), 0.0);
    auto values = p.mutable_data();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = eval();
      values[i] = saved - step;
      const double down = eval();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
    const double denom = std::max(std::sqrt(a2) + std::sqrt(n2), 1e-8);
    out.push_back({name, std::sqrt(diff2) / denom, std::sqrt(a2)});
    p.zero_grad();
  }
  return out;
}

inline double max_relative_error(const std::vector<GradCheckEntry>& entries) {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.relative_error);
  return m;
}

}  // namespace xview::testing
