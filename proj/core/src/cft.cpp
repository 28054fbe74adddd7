#include "xview/cft.hpp"

#include "xview/errors.hpp"
#include "xview/nmf.hpp"
#include "xview/ops.hpp"

namespace xview {

CftModule::CftModule(std::size_t feature_channels, const CftConfig& config, Rng& rng)
    : config_(config),
      reduce_(ConvLayer::glorot(feature_channels, config.channels, 1, 1, rng)),
      residual_(ConvLayer::glorot(config.channels, feature_channels, 1, 1, rng)),
      project_(ConvLayer::glorot(feature_channels, config.channels, 1, 1, rng)) {
  if (config.refine_iters < 0) throw ConfigError("CFT refinement iterations must be non-negative");
}

Tensor CftModule::reduce_nonneg(const Tensor& Z_ego) const {
  Tensor x = ops::relu(reduce_(Z_ego));
  return ops::reshape(x, {x.dim(0), x.dim(1) * x.dim(2)});
}

MatchMatrix CftModule::dense_match(const Tensor& X_ego, const Tensor& W) {
  if (X_ego.rank() != 2 || W.rank() != 2 || X_ego.dim(0) != W.dim(0))
    throw ShapeError("dense_match: X_ego " + shape_string(X_ego.shape()) + " incompatible with W " +
                     shape_string(W.shape()));
  for (double v : W.data())
    if (!(v >= 0.0)) throw DomainError("dense_match: dictionary has a negative or NaN entry");
  for (double v : X_ego.data())
    if (!(v >= 0.0)) throw DomainError("dense_match: egocentric features must be non-negative (got a negative or NaN entry)");
  const Tensor scores = ops::matmul(ops::transpose(X_ego), ops::stop_gradient(W));  // hw x r
  return MatchMatrix{ops::transpose(ops::softmax_rows(scores, 1.0))};
}

CftOutput CftModule::forward(const Tensor& Z_ego, const Tensor& W) const {
  if (Z_ego.rank() != 3) throw ShapeError("CFT expects a c x h x w feature map");
  if (W.rank() != 2 || W.dim(0) != config_.channels)
    throw ShapeError("CFT dictionary must have " + std::to_string(config_.channels) + " rows");
  const std::size_t h = Z_ego.dim(1), w = Z_ego.dim(2);

  CftOutput out;
  out.X_ego = reduce_nonneg(Z_ego);
  out.H_match = dense_match(out.X_ego, W).H_ego;

  NmfResult refined = nmf_refine(out.X_ego.detach(), W.detach(), out.H_match.detach(), config_.refine_iters,
                                 config_.adapt_dictionary);
  out.reconstruction_errors = std::move(refined.reconstruction_errors);
  if (config_.refine_iters == 0) {
    out.H_ego = out.H_match;
    out.W = ops::stop_gradient(W);
  } else {
    const Tensor delta = ops::stop_gradient(ops::sub(refined.H, out.H_match.detach()));
    out.H_ego = ops::add(out.H_match, delta);
    out.W = ops::stop_gradient(refined.W);
  }

  const Tensor M = ops::reshape(ops::matmul(out.W, out.H_ego), {config_.channels, h, w});
  out.fused = ops::relu(ops::add(residual_(M), Z_ego));
  const Tensor projected = ops::relu(project_(Z_ego));
  const Tensor v_fused = ops::channel_max(out.fused);
  const Tensor v_proj = ops::channel_max(projected);
  if (config_.kt_form == KtForm::kNorm) {
    out.kt_loss = ops::l2_loss(v_fused, v_proj);
  } else {
    const Tensor d = ops::sub(v_fused, v_proj);
    out.kt_loss = ops::mean(ops::mul(d, d));
  }
  return out;
}

void CftModule::collect(const std::string& prefix, NamedParams& out) const {
  reduce_.collect(prefix + "/f_reduce", out);
  residual_.collect(prefix + "/f_residual", out);
  project_.collect(prefix + "/project", out);
}

}  // namespace xview
