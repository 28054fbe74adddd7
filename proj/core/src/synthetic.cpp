#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "xview/dataset.hpp"
#include "xview/errors.hpp"
#include "xview/ftm.hpp"
#include "xview/image.hpp"
#include "xview/rng.hpp"

namespace xview {

namespace {

struct Color {
  double r, g, b;
};

const std::vector<std::string> kAffordanceNames{"grasp", "cut", "pour", "press", "lift", "push", "open", "hold"};
const std::vector<std::string> kSeenShapes{"disk", "box", "diamond", "capsule"};
const std::vector<std::string> kUnseenShapes{"ring", "cross"};

Color hsv(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h * 6.0, 6.0);
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  Color out{0, 0, 0};
  switch (static_cast<int>(hp)) {
    case 0: out = {c, x, 0}; break;
    case 1: out = {x, c, 0}; break;
    case 2: out = {0, c, x}; break;
    case 3: out = {0, x, c}; break;
    case 4: out = {x, 0, c}; break;
    default: out = {c, 0, x}; break;
  }
  const double m = v - c;
  return {255.0 * (out.r + m), 255.0 * (out.g + m), 255.0 * (out.b + m)};
}

class Canvas {
 public:
  Canvas(std::size_t size, Rng& rng) : size_(size), img_(size, size), rng_(rng) {}

  void put(long x, long y, const Color& c, double noise) {
    if (x < 0 || y < 0 || x >= static_cast<long>(size_) || y >= static_cast<long>(size_)) return;
    std::uint8_t* p = img_.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    const double n = noise > 0 ? rng_.uniform(-noise, noise) : 0.0;
    p[0] = clamp8(c.r + n);
    p[1] = clamp8(c.g + n);
    p[2] = clamp8(c.b + n);
  }

  template <typename Inside>
  void fill(double cx, double cy, double extent, const Color& c, double noise, Inside&& inside) {
    const long x0 = static_cast<long>(std::floor(cx - extent)), x1 = static_cast<long>(std::ceil(cx + extent));
    const long y0 = static_cast<long>(std::floor(cy - extent)), y1 = static_cast<long>(std::ceil(cy + extent));
    for (long y = y0; y <= y1; ++y)
      for (long x = x0; x <= x1; ++x)
        if (inside(static_cast<double>(x) - cx, static_cast<double>(y) - cy)) put(x, y, c, noise);
  }

  void shape(const std::string& kind, double cx, double cy, double r, const Color& c, double noise) {
    if (kind == "disk") {
      fill(cx, cy, r, c, noise, [r](double dx, double dy) { return dx * dx + dy * dy <= r * r; });
    } else if (kind == "box") {
      fill(cx, cy, r, c, noise, [r](double dx, double dy) { return std::fabs(dx) <= r * 0.85 && std::fabs(dy) <= r * 0.85; });
    } else if (kind == "diamond") {
      fill(cx, cy, r, c, noise, [r](double dx, double dy) { return std::fabs(dx) + std::fabs(dy) <= r * 1.1; });
    } else if (kind == "capsule") {
      fill(cx, cy, r, c, noise, [r](double dx, double dy) {
        const double ex = std::max(0.0, std::fabs(dx) - r * 0.5);
        return ex * ex + dy * dy <= r * r * 0.45;
      });
    } else if (kind == "ring") {
      fill(cx, cy, r, c, noise, [r](double dx, double dy) {
        const double d2 = dx * dx + dy * dy;
        return d2 <= r * r && d2 >= r * r * 0.3;
      });
    } else {  // cross
      fill(cx, cy, r, c, noise, [r](double dx, double dy) {
        return (std::fabs(dx) <= r * 0.35 && std::fabs(dy) <= r) || (std::fabs(dy) <= r * 0.35 && std::fabs(dx) <= r);
      });
    }
  }

  RgbImage& image() { return img_; }

 private:
  static std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }
  std::size_t size_;
  RgbImage img_;
  Rng& rng_;
};

struct Scene {
  RgbImage image;
  PointAnnotation annotation;
  bool clutter = false;
  bool off_center = false;
  bool multiple = false;
};

struct PartStyle {
  Color color;
  bool round = false;
};

void draw_part(Canvas& canvas, double px, double py, double half, const PartStyle& style) {
  if (style.round) {
    canvas.fill(px, py, half, style.color, 12.0, [half](double dx, double dy) { return dx * dx + dy * dy <= half * half; });
  } else {
    canvas.fill(px, py, half, style.color, 12.0,
                [half](double dx, double dy) { return std::fabs(dx) <= half && std::fabs(dy) <= half; });
  }
}

Scene render(const std::string& object_shape, const PartStyle& style, bool with_actor,
             std::size_t size, Rng& rng) {
  const double S = static_cast<double>(size);
  Canvas canvas(size, rng);
  Scene scene;

  const double base = rng.uniform(60.0, 110.0);
  const Color bg{base + rng.uniform(-10, 10), base + rng.uniform(-10, 10), base + rng.uniform(-10, 10)};
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) canvas.put(static_cast<long>(x), static_cast<long>(y), bg, 8.0);

  scene.clutter = rng.uniform() < 0.3;
  if (scene.clutter) {
    const std::size_t n = 6 + rng.index(5);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = rng.uniform(40.0, 200.0);
      const Color c{v + rng.uniform(-15, 15), v + rng.uniform(-15, 15), v + rng.uniform(-15, 15)};
      const double w = rng.uniform(2.0, S * 0.08), h = rng.uniform(2.0, S * 0.08);
      canvas.fill(rng.uniform(0, S), rng.uniform(0, S), std::max(w, h), c, 6.0,
                  [w, h](double dx, double dy) { return std::fabs(dx) <= w && std::fabs(dy) <= h; });
    }
  }

  scene.multiple = rng.uniform() < 0.25;
  if (scene.multiple) {
    const double g = rng.uniform(140.0, 200.0);
    canvas.shape(kSeenShapes[rng.index(kSeenShapes.size())], rng.uniform(S * 0.1, S * 0.9), rng.uniform(S * 0.1, S * 0.9),
                 S * rng.uniform(0.08, 0.12), Color{g, g, g}, 8.0);
  }

  scene.off_center = rng.uniform() < 0.3;
  const double jitter = scene.off_center ? 0.22 : 0.06;
  double cx = S * 0.5 + S * rng.uniform(-jitter, jitter);
  double cy = S * 0.5 + S * rng.uniform(-jitter, jitter);
  if (scene.off_center) {
    // Force a clearly off-centre placement.
    if (std::hypot(cx - S * 0.5, cy - S * 0.5) < S * 0.15) cx += (cx < S * 0.5 ? -1.0 : 1.0) * S * 0.15;
  }
  const double body_r = S * rng.uniform(0.17, 0.23);
  cx = std::clamp(cx, body_r, S - body_r);
  cy = std::clamp(cy, body_r, S - body_r);
  const double g = rng.uniform(150.0, 205.0);
  canvas.shape(object_shape, cx, cy, body_r, Color{g + rng.uniform(-8, 8), g + rng.uniform(-8, 8), g}, 6.0);

  // Interactive part attached to a random side of the body.
  const double part = S * rng.uniform(0.26, 0.34);
  const double angle = rng.uniform(0.0, 2.0 * M_PI);
  double px = cx + std::cos(angle) * (body_r + part * 0.2);
  double py = cy + std::sin(angle) * (body_r + part * 0.2);
  px = std::clamp(px, part * 0.5, S - 1.0 - part * 0.5);
  py = std::clamp(py, part * 0.5, S - 1.0 - part * 0.5);
  const double half = part * 0.5;
  draw_part(canvas, px, py, half, style);

  if (with_actor) {
    const Color skin{rng.uniform(200, 235), rng.uniform(150, 185), rng.uniform(110, 145)};
    // The hand grips the outer edge of the part, so most of the part stays in
    // view, and the arm leaves the scene in the same outward direction.
    const double outward = angle + rng.uniform(-0.9, 0.9);
    const double ux = std::cos(outward), uy = std::sin(outward);
    const double hx = px + ux * half * 0.9, hy = py + uy * half * 0.9;
    const double ra = part * rng.uniform(0.18, 0.25), rb = part * rng.uniform(0.3, 0.4);
    const bool vertical = rng.coin();
    const double ax = vertical ? ra : rb, ay = vertical ? rb : ra;
    const double arm = ra * 0.8;
    for (double t = 0.0; t <= 2.0 * S; t += 0.5) {
      const double x = hx + ux * t, y = hy + uy * t;
      if (x < -arm || y < -arm || x > S + arm || y > S + arm) break;
      canvas.fill(x, y, arm, skin, 5.0, [arm](double dx, double dy) { return dx * dx + dy * dy <= arm * arm; });
    }
    canvas.fill(hx, hy, std::max(ax, ay), skin, 5.0,
                [ax, ay](double dx, double dy) { return (dx * dx) / (ax * ax) + (dy * dy) / (ay * ay) <= 1.0; });
  }

  scene.annotation.width = size;
  scene.annotation.height = size;
  for (int j = -1; j <= 1; ++j)
    for (int i = -1; i <= 1; ++i) {
      const double x = std::clamp(px + i * part / 3.0, 0.0, S - 1.0);
      const double y = std::clamp(py + j * part / 3.0, 0.0, S - 1.0);
      scene.annotation.points.push_back({x, y, (i == 0 && j == 0) ? 2.0 : 1.0});
    }
  scene.image = std::move(canvas.image());
  return scene;
}

std::string padded(std::size_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", v);
  return buf;
}

}  // namespace

std::filesystem::path generate_synthetic(const std::filesystem::path& out_dir, const SyntheticSpec& spec) {
  if (spec.n_classes < 1 || spec.n_ego < 1 || spec.n_exo_per_class < 1)
    throw ConfigError("synthetic dataset counts must be at least 1");
  if (spec.image_size < 16) throw ConfigError("synthetic images must be at least 16 pixels wide");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  std::filesystem::create_directories(out_dir / "gt", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Rng rng(spec.seed);
  std::vector<SampleRecord> records;
  std::ofstream ann_out(out_dir / "annotations.jsonl");
  if (!ann_out) throw IoError("cannot write annotations under " + out_dir.string());
  const std::size_t n_train = (2 * spec.n_ego + 1) / 3;
  const double sigma = default_sigma(spec.image_size, spec.image_size);

  std::vector<PartStyle> styles;
  for (std::size_t k = 0; k < spec.n_classes; ++k)
    styles.push_back({hsv(static_cast<double>(k) / static_cast<double>(spec.n_classes), 0.85, 0.9), k % 2 == 1});

  for (std::size_t k = 0; k < spec.n_classes; ++k) {
    const std::string affordance = k < kAffordanceNames.size() ? kAffordanceNames[k] : "affordance" + std::to_string(k);
    const PartStyle style = styles[k];

    for (std::size_t i = 0; i < spec.n_ego; ++i) {
      SampleRecord r;
      r.id = affordance + "_ego_" + padded(i);
      r.role = Role::kEgocentric;
      r.affordance = affordance;
      r.split = i < n_train ? Split::kTrain : Split::kTest;
      r.seen_partition = (r.split == Split::kTest && (i - n_train) % 2 == 1) ? SeenPartition::kUnseen : SeenPartition::kSeen;
      const auto& vocab = r.seen_partition == SeenPartition::kSeen ? kSeenShapes : kUnseenShapes;
      r.object = vocab[rng.index(vocab.size())];
      Scene scene = render(r.object, style, false, spec.image_size, rng);
      r.image_path = "images/" + r.id + ".png";
      write_png(out_dir / r.image_path, scene.image);
      if (r.split == Split::kTest) {
        scene.annotation.image_id = r.id;
        write_annotation(ann_out, scene.annotation);
        const GroundingHeatmap gt = points_to_heatmap(scene.annotation, sigma);
        r.gt_heatmap_path = "gt/" + r.id + ".ftm";
        save_ftm(out_dir / *r.gt_heatmap_path, gt.map);
        r.attributes.push_back(to_string(scale_split(gt.map)));
        if (scene.clutter) r.attributes.push_back("BC");
        if (scene.off_center) r.attributes.push_back("NCP");
        if (scene.multiple) r.attributes.push_back("MO");
      }
      records.push_back(std::move(r));
    }

    for (std::size_t i = 0; i < spec.n_exo_per_class; ++i) {
      SampleRecord r;
      r.id = affordance + "_exo_" + padded(i);
      r.role = Role::kExocentric;
      r.affordance = affordance;
      r.split = Split::kTrain;
      r.seen_partition = SeenPartition::kSeen;
      r.object = kSeenShapes[rng.index(kSeenShapes.size())];
      Scene scene = render(r.object, style, true, spec.image_size, rng);
      r.image_path = "images/" + r.id + ".png";
      write_png(out_dir / r.image_path, scene.image);
      records.push_back(std::move(r));
    }
  }
  if (!ann_out) throw IoError("failed writing annotations under " + out_dir.string());
  const auto manifest = out_dir / "manifest.jsonl";
  save_manifest(manifest, records);
  return manifest;
}

}  // namespace xview
