#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xview/heatmap.hpp"

namespace xview {

enum class Role { kExocentric, kEgocentric };
enum class Split { kTrain, kTest };
enum class SeenPartition { kSeen, kUnseen };

std::string to_string(Role r);
std::string to_string(Split s);
std::string to_string(SeenPartition p);

// One manifest line.
struct SampleRecord {
  std::string id;
  Role role = Role::kEgocentric;
  std::string affordance;
  std::string object;
  Split split = Split::kTrain;
  SeenPartition seen_partition = SeenPartition::kSeen;
  std::string image_path;                      // relative to the manifest directory
  std::optional<std::string> gt_heatmap_path;  // test egocentric records only
  std::vector<std::string> attributes;         // subset of Big Middle Small BC NCP MO

  bool has_attribute(const std::string& a) const;
  bool operator==(const SampleRecord&) const = default;
};

struct Manifest {
  std::filesystem::path root;  // directory relative paths resolve against
  std::vector<SampleRecord> records;

  std::filesystem::path resolve(const std::string& relative) const { return root / relative; }
  // Sorted distinct affordance names; a class's index is its position here.
  std::vector<std::string> class_names() const;
};

// JSON-lines manifest. Blank lines are skipped; errors name the line.
std::vector<SampleRecord> parse_manifest(std::istream& in);
Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const std::vector<SampleRecord>& records);
void save_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records);

// Head = affordance classes whose image count is strictly above the median
// class count; every other class is Tail.
std::map<std::string, std::string> head_tail_split(const std::vector<SampleRecord>& records);

struct AnnotatedPoint {
  double x = 0.0;  // column, pixel units
  double y = 0.0;  // row
  double weight = 1.0;
};

struct PointAnnotation {
  std::string image_id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<AnnotatedPoint> points;
};

std::vector<PointAnnotation> parse_annotations(std::istream& in);
std::vector<PointAnnotation> load_annotations(const std::filesystem::path& path);
void write_annotation(std::ostream& out, const PointAnnotation& ann);

// Blur width used when none is given: 5% of the larger image side.
double default_sigma(std::size_t width, std::size_t height);

// Weighted sum of isotropic Gaussians at the annotated points, normalised to
// unit mass.
GroundingHeatmap points_to_heatmap(const PointAnnotation& ann, double sigma);

enum class ScaleClass { kBig, kMiddle, kSmall };
std::string to_string(ScaleClass s);

// Smallest set of highest-valued pixels holding at least `mass` of the total.
std::vector<bool> top_mass_mask(const Tensor& heatmap, double mass = 0.5);
// Big if ratio > 0.1, Middle if ratio in [0.03, 0.1], Small otherwise.
ScaleClass scale_from_ratio(double ratio);
ScaleClass scale_split(const Tensor& heatmap, double threshold_mass = 0.5);

struct SyntheticSpec {
  std::size_t n_classes = 3;
  std::size_t n_ego = 30;  // egocentric images per class (2/3 train, rest test)
  std::size_t n_exo_per_class = 30;
  std::uint64_t seed = 7;
  std::size_t image_size = 64;
};

// Writes images/, gt/, annotations.jsonl and manifest.jsonl under out_dir and
// returns the manifest path.
std::filesystem::path generate_synthetic(const std::filesystem::path& out_dir, const SyntheticSpec& spec);

}  // namespace xview
