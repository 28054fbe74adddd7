#include "xview/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "xview/errors.hpp"

namespace xview {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  RgbImage out(img.width, img.height);
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.pixels.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
}

void write_pgm(const std::filesystem::path& path, const Tensor& map) {
  if (map.rank() != 2) throw ShapeError("PGM preview needs an H x W map");
  const std::size_t h = map.dim(0), w = map.dim(1);
  double mx = 0.0;
  for (double v : map.data()) mx = std::max(mx, v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << w << ' ' << h << "\n255\n";
  for (double v : map.data()) {
    const double s = mx > 0.0 ? std::clamp(v / mx, 0.0, 1.0) : 0.0;
    out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(s * 255.0))));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor image_to_tensor(const RgbImage& image) {
  const std::size_t h = image.height, w = image.width;
  std::vector<double> data(3 * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        data[(c * h + y) * w + x] = image.at(x, y)[c] / 127.5 - 1.0;
  return Tensor({3, h, w}, std::move(data));
}

Tensor resize_bilinear(const Tensor& t, std::size_t out_h, std::size_t out_w) {
  const bool planar = t.rank() == 2;
  if (!planar && t.rank() != 3) throw ShapeError("resize expects h x w or c x h x w");
  const std::size_t c = planar ? 1 : t.dim(0);
  const std::size_t h = t.dim(planar ? 0 : 1), w = t.dim(planar ? 1 : 2);
  std::vector<double> out(c * out_h * out_w);
  auto src = t.data();
  const double sy = out_h > 1 ? static_cast<double>(h - 1) / static_cast<double>(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(w - 1) / static_cast<double>(out_w - 1) : 0.0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* plane = src.data() + ch * h * w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const double fy = static_cast<double>(y) * sy;
      const std::size_t y0 = std::min(static_cast<std::size_t>(fy), h - 1);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double wy = fy - static_cast<double>(y0);
      for (std::size_t x = 0; x < out_w; ++x) {
        const double fx = static_cast<double>(x) * sx;
        const std::size_t x0 = std::min(static_cast<std::size_t>(fx), w - 1);
        const std::size_t x1 = std::min(x0 + 1, w - 1);
        const double wx = fx - static_cast<double>(x0);
        const double top = plane[y0 * w + x0] * (1.0 - wx) + plane[y0 * w + x1] * wx;
        const double bot = plane[y1 * w + x0] * (1.0 - wx) + plane[y1 * w + x1] * wx;
        out[(ch * out_h + y) * out_w + x] = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return planar ? Tensor({out_h, out_w}, std::move(out)) : Tensor({c, out_h, out_w}, std::move(out));
}

Tensor crop(const Tensor& t, std::size_t top, std::size_t left, std::size_t size_h, std::size_t size_w) {
  if (t.rank() != 3 || top + size_h > t.dim(1) || left + size_w > t.dim(2))
    throw ShapeError("crop window outside image " + shape_string(t.shape()));
  const std::size_t c = t.dim(0), w = t.dim(2);
  std::vector<double> out(c * size_h * size_w);
  auto src = t.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < size_h; ++y)
      for (std::size_t x = 0; x < size_w; ++x)
        out[(ch * size_h + y) * size_w + x] = src[(ch * t.dim(1) + top + y) * w + left + x];
  return Tensor({c, size_h, size_w}, std::move(out));
}

Tensor flip_horizontal(const Tensor& t) {
  if (t.rank() != 2 && t.rank() != 3) throw ShapeError("flip expects h x w or c x h x w");
  const std::size_t w = t.shape().back();
  const std::size_t rows = t.numel() / w;
  std::vector<double> out(t.numel());
  auto src = t.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t x = 0; x < w; ++x) out[r * w + x] = src[r * w + (w - 1 - x)];
  return Tensor(t.shape(), std::move(out));
}

Tensor augment(const Tensor& image, std::size_t size, bool random_crop, bool random_flip, Rng& rng) {
  Tensor out = image;
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h >= size && w >= size && (h > size || w > size)) {
    if (random_crop) {
      out = crop(image, rng.index(h - size + 1), rng.index(w - size + 1), size, size);
    } else {
      out = crop(image, (h - size) / 2, (w - size) / 2, size, size);
    }
  } else if (h != size || w != size) {
    out = resize_bilinear(image, size, size);
  }
  if (random_flip && rng.coin()) out = flip_horizontal(out);
  return out;
}

Tensor fit_to_input(const Tensor& image, std::size_t size) {
  if (image.dim(1) == size && image.dim(2) == size) return image;
  return resize_bilinear(image, size, size);
}

}  // namespace xview
