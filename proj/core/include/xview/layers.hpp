#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xview/rng.hpp"
#include "xview/tensor.hpp"

namespace xview {

// Ordered (name, parameter) pairs. Tensors are shared handles, so an optimizer
// working through this list updates the owning module.
using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// Uniform kernel bounds. Glorot uses sqrt(6 / (fan_in + fan_out)); He uses
// sqrt(6 / fan_in), which keeps activation scale through stacked ReLUs.
enum class WeightInit { kGlorot, kHe };

struct ConvLayer {
  Tensor kernel;  // c_out x c_in x k x k
  Tensor bias;    // c_out
  std::size_t stride = 1;
  std::size_t padding = 0;

  // Uniform kernel, zero bias, same padding.
  static ConvLayer uniform(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t stride, WeightInit init,
                           Rng& rng);
  static ConvLayer glorot(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t stride, Rng& rng) {
    return uniform(c_in, c_out, k, stride, WeightInit::kGlorot, rng);
  }

  std::size_t in_channels() const { return kernel.dim(1); }
  std::size_t out_channels() const { return kernel.dim(0); }
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, NamedParams& out) const;
};

}  // namespace xview
