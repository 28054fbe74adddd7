#pragma once

#include <span>
#include <vector>

#include "xview/layers.hpp"
#include "xview/nmf.hpp"

namespace xview {

// Shared non-negative dictionary prior W0 (c x r) accumulated with momentum
// across optimizer steps.
struct DictionaryState {
  Tensor W0;
  double alpha = 0.9;

  static DictionaryState init(std::size_t channels, std::size_t rank, double alpha, Rng& rng);
  std::size_t channels() const { return W0.dim(0); }
  std::size_t rank() const { return W0.dim(1); }
};

// W0 <- alpha * W0 + (1 - alpha) * W_mean.
void update_dictionary_momentum(DictionaryState& dict, const Tensor& W_mean);

// Elementwise mean of per-pass converged dictionaries.
Tensor mean_dictionary(std::span<const Tensor> dictionaries);

struct AimConfig {
  std::size_t channels = 16;  // c
  std::size_t rank = 8;       // r
  int nmf_iters = 6;
};

struct AimOutput {
  std::vector<Tensor> features;  // F_i, same shape as Z_i
  Tensor W;                      // converged batch dictionary, c x r
  Tensor H;                      // r x (N*h*w)
  std::vector<double> reconstruction_errors;
};

// Mines interaction-invariant features from N exocentric feature maps: each Z_i
// is reduced to X_i >= 0, the concatenation X = [X_1 .. X_N] is factorized as
// WH starting from W0, and the reconstruction M_i is mapped back and fused
// residually, F_i = ReLU(Z_i + f(M_i)).
//
// The factorization runs on detached values, so trainable weights receive
// gradient through Z_i and the residual map f only.
class AimModule {
 public:
  AimModule() = default;
  AimModule(std::size_t feature_channels, const AimConfig& config, Rng& rng);

  // Z: c_feat x h x w -> X: c x (h*w), X >= 0.
  Tensor reduce_nonneg(const Tensor& Z) const;

  // `rng` seeds the random H initialisation.
  AimOutput forward(std::span<const Tensor> Z_list, const Tensor& W_init, Rng& rng) const;

  const AimConfig& config() const { return config_; }
  ConvLayer& reduce_layer() { return reduce_; }
  ConvLayer& residual_layer() { return residual_; }
  void collect(const std::string& prefix, NamedParams& out) const;

 private:
  AimConfig config_;
  ConvLayer reduce_;    // 1x1, c_feat -> c
  ConvLayer residual_;  // 1x1, c -> c_feat
};

}  // namespace xview
