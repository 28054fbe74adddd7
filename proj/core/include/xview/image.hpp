#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "xview/rng.hpp"
#include "xview/tensor.hpp"

namespace xview {

// 8-bit interleaved RGB image.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {}
  std::uint8_t* at(std::size_t x, std::size_t y) { return &pixels[(y * width + x) * 3]; }
  const std::uint8_t* at(std::size_t x, std::size_t y) const { return &pixels[(y * width + x) * 3]; }
};

RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

// 8-bit greyscale PGM preview of a non-negative map, scaled so its maximum is 255.
void write_pgm(const std::filesystem::path& path, const Tensor& map);

// 3 x H x W tensor, pixels mapped linearly from [0, 255] to [-1, 1].
Tensor image_to_tensor(const RgbImage& image);

// Bilinear resize of a c x h x w tensor (corner-aligned sampling).
Tensor resize_bilinear(const Tensor& t, std::size_t out_h, std::size_t out_w);
// Crop of a c x h x w tensor.
Tensor crop(const Tensor& t, std::size_t top, std::size_t left, std::size_t size_h, std::size_t size_w);
// Mirror along the width axis of a c x h x w (or h x w) tensor.
Tensor flip_horizontal(const Tensor& t);

// Training-time view: random crop to `size` when the image is larger (resize
// when smaller), then an optional random horizontal flip.
Tensor augment(const Tensor& image, std::size_t size, bool random_crop, bool random_flip, Rng& rng);
// Test-time view: resize to `size` x `size`.
Tensor fit_to_input(const Tensor& image, std::size_t size);

}  // namespace xview
