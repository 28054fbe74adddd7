#pragma once

#include <vector>

#include "xview/layers.hpp"

namespace xview {

// How the two channel-max maps are compared in L_KT. kNorm is the plain
// Euclidean distance; kMeanSquare averages the squared per-pixel difference.
enum class KtForm { kNorm, kMeanSquare };

struct CftConfig {
  std::size_t channels = 16;  // c, must match the AIM dictionary rows
  int refine_iters = 6;
  // When false, refinement updates H_ego only and keeps the dictionary fixed.
  bool adapt_dictionary = true;
  KtForm kt_form = KtForm::kMeanSquare;
};

// Per-pixel distribution over dictionary bases, stored r x (h*w).
struct MatchMatrix {
  Tensor H_ego;
};

struct CftOutput {
  Tensor fused;    // F~_ego, same shape as Z_ego
  Tensor kt_loss;  // scalar L_KT
  Tensor X_ego;    // c x (h*w), >= 0
  Tensor H_match;  // dense-match output before refinement
  Tensor H_ego;    // after refinement
  Tensor W;        // locally refined dictionary
  std::vector<double> reconstruction_errors;
};

// Transfers the exocentric dictionary to an egocentric feature map: pixels are
// softly assigned to dictionary bases, the assignment and a local copy of the
// dictionary are refined by multiplicative NMF updates, and the reconstruction
// W*H_ego is fused back into Z_ego. Also produces the alignment loss between
// the per-pixel channel maxima of the fused map and of a projection of Z_ego.
//
// The refinement runs on detached values; gradients pass through the dense
// match via a straight-through correction H = H_match + stop(H_refined - H_match).
class CftModule {
 public:
  CftModule() = default;
  CftModule(std::size_t feature_channels, const CftConfig& config, Rng& rng);

  Tensor reduce_nonneg(const Tensor& Z_ego) const;

  // softmax over bases of X_ego^T W, transposed to r x (h*w). W is treated as
  // a constant.
  static MatchMatrix dense_match(const Tensor& X_ego, const Tensor& W);

  // W: dictionary (c x r, >= 0). Never modified; refinement works on a copy.
  CftOutput forward(const Tensor& Z_ego, const Tensor& W) const;

  const CftConfig& config() const { return config_; }
  CftConfig& mutable_config() { return config_; }
  ConvLayer& reduce_layer() { return reduce_; }
  ConvLayer& residual_layer() { return residual_; }
  ConvLayer& project_layer() { return project_; }
  const ConvLayer& project_layer() const { return project_; }
  void collect(const std::string& prefix, NamedParams& out) const;

 private:
  CftConfig config_;
  ConvLayer reduce_;    // 1x1, c_feat -> c
  ConvLayer residual_;  // 1x1, c -> c_feat
  ConvLayer project_;   // 1x1, c_feat -> c, followed by ReLU
};

}  // namespace xview
