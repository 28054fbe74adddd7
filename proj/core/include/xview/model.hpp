#pragma once

#include <span>
#include <string>
#include <vector>

#include "xview/aim.hpp"
#include "xview/cft.hpp"
#include "xview/config.hpp"
#include "xview/encoder.hpp"
#include "xview/ftm.hpp"
#include "xview/head.hpp"

namespace xview {

struct ModelConfig {
  EncoderConfig encoder;
  AimConfig aim;
  CftConfig cft;
  HeadConfig head;
  double alpha = 0.9;

  static ModelConfig from_train_config(const TrainConfig& config, std::size_t num_classes);
};

struct InstanceResult {
  LossBreakdown losses;
  Tensor W_batch;  // converged AIM dictionary for this forward pass
  HeadOutput head;
};

// Two-branch network: shared encoder, AIM on the exocentric branch, CFT on the
// egocentric branch, shared head, plus the momentum dictionary prior.
class Model {
 public:
  Model() = default;
  Model(const ModelConfig& config, std::vector<std::string> class_names, std::uint64_t seed);

  // One training instance: 1 egocentric + N exocentric images of `label`.
  // `rng` seeds the AIM coefficient initialisation.
  InstanceResult forward_instance(const Tensor& ego_image, std::span<const Tensor> exo_images, std::size_t label,
                                  const LossWeights& weights, double temperature, Rng& rng) const;

  // Egocentric-only pass used at test time: returns D_ego, with CFT matching
  // against the accumulated dictionary W0.
  Tensor egocentric_features(const Tensor& image) const;

  NamedParams parameters() const;

  const ModelConfig& config() const { return config_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t class_index(const std::string& name) const;

  Encoder encoder;
  AimModule aim;
  CftModule cft;
  Head head;
  DictionaryState dictionary;

  // Parameters, W0 and architecture metadata as a named tensor archive.
  TensorArchive to_archive() const;
  static Model from_archive(const TensorArchive& archive);

 private:
  ModelConfig config_;
  std::vector<std::string> class_names_;
};

}  // namespace xview
