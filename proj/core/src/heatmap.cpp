#include "xview/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "xview/errors.hpp"

namespace xview {

Tensor normalize_mass(const Tensor& map) {
  double total = 0.0;
  for (double v : map.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("heatmap has a negative or non-finite entry");
    total += v;
  }
  if (!(total > 0.0)) throw DomainError("heatmap has zero total mass");
  std::vector<double> out(map.data().begin(), map.data().end());
  for (double& v : out) v /= total;
  return Tensor(map.shape(), std::move(out));
}

std::size_t argmax(const Tensor& map) {
  auto d = map.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

}  // namespace xview
