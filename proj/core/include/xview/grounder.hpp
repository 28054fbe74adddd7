#pragma once

#include <filesystem>
#include <string>

#include "xview/heatmap.hpp"
#include "xview/model.hpp"

namespace xview {

// Class activation map: sum_i w[class, i] * D[i]. No normalisation.
// D_ego: c_head x h x w, fc_weights: N_c x c_head.
Tensor compute_cam(const Tensor& D_ego, const Tensor& fc_weights, std::size_t class_index);

// ReLU -> bilinear upsample to out_h x out_w -> shift minimum to zero ->
// unit mass. A map with no variation becomes uniform.
Tensor cam_to_heatmap(const Tensor& cam, std::size_t out_h, std::size_t out_w);

// Egocentric-only grounding of `label` on a 3 x H x W image in [-1, 1]. The
// heatmap has the image's H x W. The model is not modified.
GroundingHeatmap ground(const Model& model, const Tensor& image, std::size_t label, const std::string& image_id);

// Writes <image_id>.<affordance>.ftm and a matching .pgm preview into `dir`.
std::filesystem::path write_heatmap(const std::filesystem::path& dir, const GroundingHeatmap& heatmap,
                                    const std::string& affordance);
std::filesystem::path heatmap_path(const std::filesystem::path& dir, const std::string& image_id,
                                   const std::string& affordance);

}  // namespace xview
