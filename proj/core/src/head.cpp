#include "xview/head.hpp"

#include <cmath>

#include "xview/errors.hpp"
#include "xview/ops.hpp"

namespace xview {

namespace {
constexpr double kLogGuard = 1e-12;
}

Head::Head(std::size_t feature_channels, const HeadConfig& config, Rng& rng)
    : config_(config), conv_(ConvLayer::glorot(feature_channels, config.channels, 3, 1, rng)) {
  if (config.num_classes == 0) throw ConfigError("head needs at least one class");
  const double limit = std::sqrt(6.0 / static_cast<double>(config.channels + config.num_classes));
  std::vector<double> w(config.num_classes * config.channels);
  for (double& v : w) v = rng.uniform(-limit, limit);
  fc_weight_ = Tensor({config.num_classes, config.channels}, std::move(w), true);
  fc_bias_ = Tensor::zeros({config.num_classes}, true);
}

Tensor Head::features(const Tensor& F) const { return ops::relu(conv_(F)); }

Tensor Head::logits(const Tensor& D) const {
  const Tensor d = ops::reshape(ops::gap(D), {D.dim(0), 1});
  const Tensor z = ops::matmul(fc_weight_, d);
  return ops::add(ops::reshape(z, {config_.num_classes}), fc_bias_);
}

HeadOutput Head::forward(std::span<const Tensor> F_exo, const Tensor& F_ego) const {
  if (F_exo.empty()) throw InputError("head needs at least one exocentric feature map");
  HeadOutput out;
  for (const auto& f : F_exo) {
    out.D_exo.push_back(features(f));
    out.exo_logits.push_back(logits(out.D_exo.back()));
  }
  out.D_ego = features(F_ego);
  out.scores.s = ops::average(out.exo_logits);
  out.scores.g = logits(out.D_ego);
  return out;
}

void Head::collect(const std::string& prefix, NamedParams& out) const {
  conv_.collect(prefix + "/conv", out);
  out.emplace_back(prefix + "/fc/kernel", fc_weight_);
  out.emplace_back(prefix + "/fc/bias", fc_bias_);
}

Tensor correlation_matrix(const Tensor& scores, double temperature) {
  const Tensor p = ops::softmax_rows(scores, temperature);
  return ops::outer(p, p);
}

Tensor acp_loss(const Tensor& s, const Tensor& g, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("ACP temperature must be positive");
  if (s.rank() != 1 || s.shape() != g.shape()) throw ShapeError("acp_loss expects two logit vectors of equal length");
  const Tensor P = ops::stop_gradient(correlation_matrix(s, temperature));
  const Tensor Q = correlation_matrix(g, temperature);
  return ops::scale(ops::sum(ops::mul(P, ops::log(Q, kLogGuard))), -1.0);
}

LossBreakdown total_loss(std::span<const Tensor> exo_logits, const Tensor& ego_logits, std::size_t label,
                         const Tensor& kt_loss, const LossWeights& weights, double temperature) {
  if (weights.cls < 0.0 || weights.acp < 0.0 || weights.kt < 0.0)
    throw ConfigError("loss weights must be non-negative");
  if (exo_logits.empty()) throw InputError("total_loss needs at least one exocentric prediction");
  std::vector<Tensor> exo_ce;
  exo_ce.reserve(exo_logits.size());
  for (const auto& z : exo_logits) exo_ce.push_back(ops::cross_entropy(z, label));
  LossBreakdown out;
  out.cls = ops::add(ops::average(exo_ce), ops::cross_entropy(ego_logits, label));
  out.acp = acp_loss(ops::average(exo_logits), ego_logits, temperature);
  out.kt = kt_loss;
  out.total = ops::add(ops::add(ops::scale(out.cls, weights.cls), ops::scale(out.acp, weights.acp)),
                       ops::scale(out.kt, weights.kt));
  return out;
}

}  // namespace xview
