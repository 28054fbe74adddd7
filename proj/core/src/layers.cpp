#include "xview/layers.hpp"

#include <cmath>

#include "xview/ops.hpp"

namespace xview {

ConvLayer ConvLayer::uniform(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t stride, WeightInit init,
                             Rng& rng) {
  const double fan_in = static_cast<double>(c_in * k * k);
  const double fan_out = static_cast<double>(c_out * k * k);
  const double limit = init == WeightInit::kHe ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
  std::vector<double> w(c_out * c_in * k * k);
  for (double& v : w) v = rng.uniform(-limit, limit);
  ConvLayer layer;
  layer.kernel = Tensor({c_out, c_in, k, k}, std::move(w), true);
  layer.bias = Tensor::zeros({c_out}, true);
  layer.stride = stride;
  layer.padding = k / 2;
  return layer;
}

Tensor ConvLayer::operator()(const Tensor& x) const { return ops::conv2d(x, kernel, bias, stride, padding); }

void ConvLayer::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + "/kernel", kernel);
  out.emplace_back(prefix + "/bias", bias);
}

}  // namespace xview
