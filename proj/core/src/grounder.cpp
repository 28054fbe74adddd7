#include "xview/grounder.hpp"

#include <algorithm>

#include "xview/errors.hpp"
#include "xview/image.hpp"

namespace xview {

Tensor compute_cam(const Tensor& D_ego, const Tensor& fc_weights, std::size_t class_index) {
  if (D_ego.rank() != 3 || fc_weights.rank() != 2 || fc_weights.dim(1) != D_ego.dim(0))
    throw ShapeError("compute_cam: D " + shape_string(D_ego.shape()) + " incompatible with fc weights " +
                     shape_string(fc_weights.shape()));
  if (class_index >= fc_weights.dim(0))
    throw LabelError("class index " + std::to_string(class_index) + " out of range [0, " +
                     std::to_string(fc_weights.dim(0)) + ")");
  const std::size_t c = D_ego.dim(0), hw = D_ego.dim(1) * D_ego.dim(2);
  std::vector<double> cam(hw, 0.0);
  auto d = D_ego.data();
  auto w = fc_weights.data().subspan(class_index * c, c);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < hw; ++i) cam[i] += w[ch] * d[ch * hw + i];
  return Tensor({D_ego.dim(1), D_ego.dim(2)}, std::move(cam));
}

Tensor cam_to_heatmap(const Tensor& cam, std::size_t out_h, std::size_t out_w) {
  if (cam.rank() != 2) throw ShapeError("cam_to_heatmap expects an h x w map");
  std::vector<double> clipped(cam.data().begin(), cam.data().end());
  for (double& v : clipped) v = std::max(v, 0.0);
  const Tensor up = resize_bilinear(Tensor(cam.shape(), std::move(clipped)), out_h, out_w);
  std::vector<double> out(up.data().begin(), up.data().end());
  const double lo = *std::min_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) total += (v -= lo);
  if (!(total > 0.0)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  } else {
    for (double& v : out) v /= total;
  }
  return Tensor({out_h, out_w}, std::move(out));
}

GroundingHeatmap ground(const Model& model, const Tensor& image, std::size_t label, const std::string& image_id) {
  if (label >= model.config().head.num_classes) throw LabelError("label out of range for this checkpoint");
  if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("ground expects a 3 x H x W image");
  NoGradGuard no_grad;
  const Tensor input = fit_to_input(image, model.config().encoder.input_size);
  const Tensor D = model.egocentric_features(input);
  const Tensor cam = compute_cam(D, model.head.fc_weight(), label);
  return GroundingHeatmap{cam_to_heatmap(cam, image.dim(1), image.dim(2)), label, image_id};
}

std::filesystem::path heatmap_path(const std::filesystem::path& dir, const std::string& image_id,
                                   const std::string& affordance) {
  return dir / (image_id + "." + affordance + ".ftm");
}

std::filesystem::path write_heatmap(const std::filesystem::path& dir, const GroundingHeatmap& heatmap,
                                    const std::string& affordance) {
  const auto path = heatmap_path(dir, heatmap.image_id, affordance);
  save_ftm(path, heatmap.map);
  auto preview = path;
  preview.replace_extension(".pgm");
  write_pgm(preview, heatmap.map);
  return path;
}

}  // namespace xview
