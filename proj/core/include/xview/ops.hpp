#pragma once

#include <span>

#include "xview/tensor.hpp"

// Differentiable operations. Each records its backward rule on the tape when
// any input requires grad.
namespace xview::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Elementwise mean of same-shape tensors.
Tensor average(std::span<const Tensor> items);

Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);
// Column vector p (n) times row vector q (m) -> n x m.
Tensor outer(const Tensor& p, const Tensor& q);

Tensor relu(const Tensor& a);
// log(a + guard), elementwise.
Tensor log(const Tensor& a, double guard = 0.0);
// Softmax over the last axis of a rank-2 tensor (or the whole of a vector) of
// logits / temperature.
Tensor softmax_rows(const Tensor& a, double temperature = 1.0);

// x: c_in x h x w, kernel: c_out x c_in x k x k, bias: c_out (may be undefined).
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t stride, std::size_t padding);
// Global average pooling, c x h x w -> c.
Tensor gap(const Tensor& a);
// Per-pixel maximum over channels, c x h x w -> h x w. Ties go to the lowest
// channel index, which also receives the whole gradient.
Tensor channel_max(const Tensor& a);

// Euclidean norm of a - b. The gradient at a == b is taken as zero.
Tensor l2_loss(const Tensor& a, const Tensor& b);
// Softmax cross-entropy of a logit vector against a class index.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

// Value-identical tensor that contributes no gradient upstream.
Tensor stop_gradient(const Tensor& a);

// Records the value of every stop_gradient() call made on this thread while in
// scope, or replays previously recorded values in the same order. Replay turns
// a forward pass into the function its analytic gradient actually
// differentiates (all stop-gradient outputs held constant), which is what a
// finite-difference check must perturb.
class StopGradientCapture {
 public:
  enum class Mode { kRecord, kReplay };

  explicit StopGradientCapture(Mode mode, std::vector<Tensor>* values);
  ~StopGradientCapture();
  StopGradientCapture(const StopGradientCapture&) = delete;
  StopGradientCapture& operator=(const StopGradientCapture&) = delete;

  Tensor intercept(const Tensor& value);

 private:
  Mode mode_;
  std::vector<Tensor>* values_;
  std::size_t cursor_ = 0;
  StopGradientCapture* previous_;
};

}  // namespace xview::ops
