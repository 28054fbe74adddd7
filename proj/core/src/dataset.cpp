#include "xview/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "xview/errors.hpp"

namespace xview {

using nlohmann::json;

namespace {

const std::set<std::string> kAttributes{"Big", "Middle", "Small", "BC", "NCP", "MO"};
const std::set<std::string> kScaleAttributes{"Big", "Middle", "Small"};

const json& field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + name + "'", line);
  return *it;
}

std::string string_field(const json& obj, const char* name, std::size_t line) {
  const json& v = field(obj, name, line);
  if (!v.is_string()) throw ParseError(std::string("field '") + name + "' must be a string", line);
  return v.get<std::string>();
}

template <typename Enum>
Enum enum_field(const json& obj, const char* name, std::size_t line,
                const std::vector<std::pair<const char*, Enum>>& values) {
  const std::string v = string_field(obj, name, line);
  for (const auto& [text, e] : values)
    if (v == text) return e;
  throw ParseError(std::string("unknown value '") + v + "' for field '" + name + "'", line);
}

}  // namespace

std::string to_string(Role r) { return r == Role::kExocentric ? "exocentric" : "egocentric"; }
std::string to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }
std::string to_string(SeenPartition p) { return p == SeenPartition::kSeen ? "seen" : "unseen"; }

bool SampleRecord::has_attribute(const std::string& a) const {
  return std::find(attributes.begin(), attributes.end(), a) != attributes.end();
}

std::vector<std::string> Manifest::class_names() const {
  std::set<std::string> names;
  for (const auto& r : records) names.insert(r.affordance);
  return {names.begin(), names.end()};
}

std::vector<SampleRecord> parse_manifest(std::istream& in) {
  std::vector<SampleRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!obj.is_object()) throw ParseError("record must be a JSON object", lineno);
    SampleRecord r;
    r.id = string_field(obj, "id", lineno);
    r.role = enum_field<Role>(obj, "role", lineno, {{"exocentric", Role::kExocentric}, {"egocentric", Role::kEgocentric}});
    r.affordance = string_field(obj, "affordance", lineno);
    r.object = string_field(obj, "object", lineno);
    r.split = enum_field<Split>(obj, "split", lineno, {{"train", Split::kTrain}, {"test", Split::kTest}});
    r.seen_partition = enum_field<SeenPartition>(obj, "seen_partition", lineno,
                                                 {{"seen", SeenPartition::kSeen}, {"unseen", SeenPartition::kUnseen}});
    r.image_path = string_field(obj, "image_path", lineno);
    const json& gt = field(obj, "gt_heatmap_path", lineno);
    if (gt.is_string()) {
      if (!gt.get<std::string>().empty()) r.gt_heatmap_path = gt.get<std::string>();
    } else if (!gt.is_null()) {
      throw ParseError("field 'gt_heatmap_path' must be a string or null", lineno);
    }
    const json& attrs = field(obj, "attributes", lineno);
    if (!attrs.is_array()) throw ParseError("field 'attributes' must be an array", lineno);
    for (const auto& a : attrs) {
      if (!a.is_string() || !kAttributes.count(a.get<std::string>()))
        throw ParseError("unknown attribute " + a.dump(), lineno);
      r.attributes.push_back(a.get<std::string>());
    }
    if (r.id.empty() || r.affordance.empty()) throw ParseError("id and affordance must be non-empty", lineno);
    if (r.split == Split::kTest && r.role == Role::kEgocentric && !r.gt_heatmap_path)
      throw ParseError("test egocentric record '" + r.id + "' needs gt_heatmap_path", lineno);
    if (r.gt_heatmap_path) {
      const auto scales = std::count_if(r.attributes.begin(), r.attributes.end(),
                                        [](const std::string& a) { return kScaleAttributes.count(a) > 0; });
      if (scales != 1) throw ParseError("record '" + r.id + "' needs exactly one of Big/Middle/Small", lineno);
    }
    out.push_back(std::move(r));
  }
  return out;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.root = path.parent_path();
  try {
    m.records = parse_manifest(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
  return m;
}

void write_manifest(std::ostream& out, const std::vector<SampleRecord>& records) {
  for (const auto& r : records) {
    json obj = json::object();
    obj["id"] = r.id;
    obj["role"] = to_string(r.role);
    obj["affordance"] = r.affordance;
    obj["object"] = r.object;
    obj["split"] = to_string(r.split);
    obj["seen_partition"] = to_string(r.seen_partition);
    obj["image_path"] = r.image_path;
    obj["gt_heatmap_path"] = r.gt_heatmap_path ? json(*r.gt_heatmap_path) : json(nullptr);
    obj["attributes"] = r.attributes;
    out << obj.dump() << '\n';
  }
}

void save_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_manifest(out, records);
  if (!out) throw IoError("failed writing " + path.string());
}

std::map<std::string, std::string> head_tail_split(const std::vector<SampleRecord>& records) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.affordance];
  std::map<std::string, std::string> out;
  if (counts.empty()) return out;
  std::vector<double> sorted;
  for (const auto& [_, n] : counts) sorted.push_back(static_cast<double>(n));
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  for (const auto& [name, count] : counts) out[name] = static_cast<double>(count) > median ? "Head" : "Tail";
  return out;
}

std::vector<PointAnnotation> parse_annotations(std::istream& in) {
  std::vector<PointAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    PointAnnotation ann;
    ann.image_id = string_field(obj, "id", lineno);
    const json& w = field(obj, "width", lineno);
    const json& h = field(obj, "height", lineno);
    if (!w.is_number_unsigned() || !h.is_number_unsigned()) throw ParseError("width/height must be positive integers", lineno);
    ann.width = w.get<std::size_t>();
    ann.height = h.get<std::size_t>();
    const json& pts = field(obj, "points", lineno);
    if (!pts.is_array()) throw ParseError("field 'points' must be an array", lineno);
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
        throw ParseError("each point must be [x, y, weight]", lineno);
      ann.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    out.push_back(std::move(ann));
  }
  return out;
}

std::vector<PointAnnotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations " + path.string());
  return parse_annotations(in);
}

void write_annotation(std::ostream& out, const PointAnnotation& ann) {
  json pts = json::array();
  for (const auto& p : ann.points) pts.push_back({p.x, p.y, p.weight});
  out << json{{"id", ann.image_id}, {"width", ann.width}, {"height", ann.height}, {"points", pts}}.dump() << '\n';
}

double default_sigma(std::size_t width, std::size_t height) {
  return 0.05 * static_cast<double>(std::max(width, height));
}

GroundingHeatmap points_to_heatmap(const PointAnnotation& ann, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("heatmap sigma must be positive");
  if (ann.width == 0 || ann.height == 0) throw AnnotationError("annotation '" + ann.image_id + "' has empty image size");
  if (ann.points.empty()) throw AnnotationError("annotation '" + ann.image_id + "' has no points");
  for (const auto& p : ann.points) {
    if (!(p.weight > 0.0)) throw AnnotationError("annotation '" + ann.image_id + "' has a non-positive point weight");
    if (!(p.x >= 0.0 && p.x < static_cast<double>(ann.width) && p.y >= 0.0 && p.y < static_cast<double>(ann.height)))
      throw AnnotationError("annotation '" + ann.image_id + "' has a point outside the image");
  }
  const std::size_t h = ann.height, w = ann.width;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> map(h * w, 0.0);
  for (const auto& p : ann.points) {
    // Separable evaluation: exp(-(dx^2 + dy^2) k) = exp(-dx^2 k) exp(-dy^2 k).
    std::vector<double> gx(w), gy(h);
    for (std::size_t x = 0; x < w; ++x) gx[x] = std::exp(-(static_cast<double>(x) - p.x) * (static_cast<double>(x) - p.x) * inv2s2);
    for (std::size_t y = 0; y < h; ++y) gy[y] = std::exp(-(static_cast<double>(y) - p.y) * (static_cast<double>(y) - p.y) * inv2s2);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) map[y * w + x] += p.weight * gy[y] * gx[x];
  }
  return GroundingHeatmap{normalize_mass(Tensor({h, w}, std::move(map))), 0, ann.image_id};
}

std::string to_string(ScaleClass s) {
  switch (s) {
    case ScaleClass::kBig: return "Big";
    case ScaleClass::kMiddle: return "Middle";
    case ScaleClass::kSmall: return "Small";
  }
  return "Small";
}

std::vector<bool> top_mass_mask(const Tensor& heatmap, double mass) {
  auto v = heatmap.data();
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  std::vector<bool> mask(v.size(), false);
  double acc = 0.0;
  for (std::size_t i : order) {
    if (acc >= mass * total) break;
    mask[i] = true;
    acc += v[i];
  }
  return mask;
}

ScaleClass scale_from_ratio(double ratio) {
  if (ratio > 0.1) return ScaleClass::kBig;
  if (ratio >= 0.03) return ScaleClass::kMiddle;
  return ScaleClass::kSmall;
}

ScaleClass scale_split(const Tensor& heatmap, double threshold_mass) {
  const auto mask = top_mass_mask(heatmap, threshold_mass);
  const auto n = std::count(mask.begin(), mask.end(), true);
  return scale_from_ratio(static_cast<double>(n) / static_cast<double>(mask.size()));
}

}  // namespace xview
