#pragma once

#include <vector>

#include "xview/layers.hpp"

namespace xview {

struct EncoderConfig {
  std::size_t input_size = 64;
  std::size_t stem_channels = 8;
  // One (3x3 conv, ReLU, stride-2 3x3 conv, ReLU) block per entry.
  std::vector<std::size_t> stage_channels{8, 16, 32};
  WeightInit init = WeightInit::kHe;

  std::size_t feature_channels() const { return stage_channels.back(); }
  std::size_t feature_size() const { return input_size >> stage_channels.size(); }
};

// Convolutional backbone shared by the exocentric and egocentric branches.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, Rng& rng);

  // image: 3 x H x W with H == W == input_size, pixels in [-1, 1].
  // Returns c_feat x h x w.
  Tensor encode(const Tensor& image) const;

  const EncoderConfig& config() const { return config_; }
  void collect(const std::string& prefix, NamedParams& out) const;

 private:
  EncoderConfig config_;
  ConvLayer stem_;
  std::vector<ConvLayer> convs_;
  std::vector<ConvLayer> downs_;
};

}  // namespace xview
