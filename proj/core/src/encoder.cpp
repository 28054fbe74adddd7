#include "xview/encoder.hpp"

#include "xview/errors.hpp"
#include "xview/ops.hpp"

namespace xview {

Encoder::Encoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  if (config.stage_channels.empty()) throw ConfigError("encoder needs at least one stage");
  if (config.feature_size() == 0) throw ConfigError("encoder input too small for the number of stages");
  stem_ = ConvLayer::uniform(3, config.stem_channels, 3, 1, config.init, rng);
  std::size_t prev = config.stem_channels;
  for (std::size_t ch : config.stage_channels) {
    convs_.push_back(ConvLayer::uniform(prev, ch, 3, 1, config.init, rng));
    downs_.push_back(ConvLayer::uniform(ch, ch, 3, 2, config.init, rng));
    prev = ch;
  }
}

Tensor Encoder::encode(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != config_.input_size ||
      image.dim(2) != config_.input_size)
    throw ShapeError("encoder expects a 3x" + std::to_string(config_.input_size) + "x" +
                     std::to_string(config_.input_size) + " image, got " + shape_string(image.shape()));
  Tensor x = ops::relu(stem_(image));
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    x = ops::relu(convs_[i](x));
    x = ops::relu(downs_[i](x));
  }
  return x;
}

void Encoder::collect(const std::string& prefix, NamedParams& out) const {
  stem_.collect(prefix + "/stem", out);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect(prefix + "/stage" + std::to_string(i) + "_conv", out);
    downs_[i].collect(prefix + "/stage" + std::to_string(i) + "_down", out);
  }
}

}  // namespace xview
