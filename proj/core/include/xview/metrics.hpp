#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xview/dataset.hpp"

namespace xview {

inline constexpr double kDefaultKldEpsilon = 1e-12;

// Prediction P and ground truth Q^D over the same H x W grid.
struct HeatmapPair {
  Tensor prediction;
  Tensor ground_truth;

  HeatmapPair(Tensor p, Tensor q);
};

// sum_i Q_i log(eps + Q_i / (eps + P_i)), both maps scaled to unit mass first.
double kld(const HeatmapPair& pair, double epsilon = kDefaultKldEpsilon);
// sum_i min(P_i, Q_i), both maps scaled to unit mass first.
double sim(const HeatmapPair& pair);
// (1 / sum Q) sum_i Q_i (P_i - mean P) / std P, population std, Q continuous.
// Throws DegeneratePredictionError when P is constant.
double nss(const HeatmapPair& pair);

struct ImageMetrics {
  std::string id;
  std::string affordance;
  double kld = 0.0;
  double sim = 0.0;
  double nss = 0.0;
  bool hit = false;           // prediction argmax inside the GT top-half-mass region
  double uniform_kld = 0.0;   // same metrics for a uniform prediction
  double uniform_sim = 0.0;
  std::vector<std::string> slices;
};

struct SliceStats {
  std::string slice;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n = 0;
};

struct MetricReport {
  std::vector<ImageMetrics> rows;
  std::vector<std::string> missing;  // test records without a prediction file
  std::vector<SliceStats> stats;

  // Throws InputError when the (slice, metric) pair is absent.
  const SliceStats& find(const std::string& slice, const std::string& metric) const;
};

// Slice families: overall, class, partition (seen/unseen), scale
// (Big/Middle/Small), attribute (BC/NCP/MO), longtail (Head/Tail).
std::vector<std::string> all_slice_families();

// Scores every test egocentric record against <dir>/<id>.<affordance>.ftm.
// Missing predictions are listed and excluded from the means.
MetricReport evaluate_set(const std::filesystem::path& heatmap_dir, const Manifest& manifest,
                          const std::vector<std::string>& slice_families = all_slice_families());

// CSV "slice,metric,mean,std,n".
void write_report_csv(std::ostream& out, const MetricReport& report);
std::vector<SliceStats> read_report_csv(std::istream& in);
void write_per_image_csv(std::ostream& out, const MetricReport& report);
// Aligned text table: one row per slice with KLD / SIM / NSS columns.
void write_report_table(std::ostream& out, const std::vector<SliceStats>& stats,
                        const std::vector<std::string>& slice_prefixes = {});

}  // namespace xview
