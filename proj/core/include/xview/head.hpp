#pragma once

#include <span>
#include <vector>

#include "xview/layers.hpp"

namespace xview {

struct HeadConfig {
  std::size_t channels = 64;  // c_head: output channels of the shared conv
  std::size_t num_classes = 3;
};

struct PredictionScores {
  Tensor s;  // exocentric logits (mean over the N exocentric images)
  Tensor g;  // egocentric logits
};

struct HeadOutput {
  std::vector<Tensor> D_exo;
  Tensor D_ego;
  std::vector<Tensor> exo_logits;  // one per exocentric image
  PredictionScores scores;
};

// Shared conv -> GAP -> shared FC, applied identically to both branches.
class Head {
 public:
  Head() = default;
  Head(std::size_t feature_channels, const HeadConfig& config, Rng& rng);

  Tensor features(const Tensor& F) const;  // D = ReLU(conv(F)), c_head x h x w
  Tensor logits(const Tensor& D) const;    // fc(gap(D)), N_c
  HeadOutput forward(std::span<const Tensor> F_exo, const Tensor& F_ego) const;

  const HeadConfig& config() const { return config_; }
  Tensor& fc_weight() { return fc_weight_; }  // N_c x c_head
  Tensor& fc_bias() { return fc_bias_; }      // N_c
  const Tensor& fc_weight() const { return fc_weight_; }
  const Tensor& fc_bias() const { return fc_bias_; }
  ConvLayer& conv() { return conv_; }
  void collect(const std::string& prefix, NamedParams& out) const;

 private:
  HeadConfig config_;
  ConvLayer conv_;
  Tensor fc_weight_;
  Tensor fc_bias_;
};

// Rank-1 class co-relation matrix p p^T of p = softmax(scores / T).
Tensor correlation_matrix(const Tensor& scores, double temperature);

// Cross-entropy between the co-relation matrices of the two branches,
// -sum_jk P_jk log(Q_jk + 1e-12). P (exocentric) acts as a frozen target.
Tensor acp_loss(const Tensor& s, const Tensor& g, double temperature);

struct LossWeights {
  double cls = 1.0;
  double acp = 0.5;
  double kt = 0.5;
};

struct LossBreakdown {
  Tensor cls;  // mean exocentric CE + egocentric CE
  Tensor acp;
  Tensor kt;
  Tensor total;  // weights.cls * cls + weights.acp * acp + weights.kt * kt
};

LossBreakdown total_loss(std::span<const Tensor> exo_logits, const Tensor& ego_logits, std::size_t label,
                         const Tensor& kt_loss, const LossWeights& weights, double temperature);

}  // namespace xview
