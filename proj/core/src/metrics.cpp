#include "xview/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "xview/errors.hpp"
#include "xview/ftm.hpp"

namespace xview {

HeatmapPair::HeatmapPair(Tensor p, Tensor q) : prediction(std::move(p)), ground_truth(std::move(q)) {
  if (prediction.shape() != ground_truth.shape())
    throw ShapeError("heatmap pair shapes differ: " + shape_string(prediction.shape()) + " vs " +
                     shape_string(ground_truth.shape()));
  for (double v : prediction.data())
    if (!std::isfinite(v)) throw DomainError("prediction has a non-finite entry");
}

double kld(const HeatmapPair& pair, double epsilon) {
  const Tensor p = normalize_mass(pair.prediction);
  const Tensor q = normalize_mass(pair.ground_truth);
  auto pd = p.data(), qd = q.data();
  double out = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) out += qd[i] * std::log(epsilon + qd[i] / (epsilon + pd[i]));
  return out;
}

double sim(const HeatmapPair& pair) {
  const Tensor p = normalize_mass(pair.prediction);
  const Tensor q = normalize_mass(pair.ground_truth);
  auto pd = p.data(), qd = q.data();
  double out = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) out += std::min(pd[i], qd[i]);
  return out;
}

double nss(const HeatmapPair& pair) {
  auto pd = pair.prediction.data();
  auto qd = pair.ground_truth.data();
  double q_total = 0.0;
  for (double v : qd) {
    if (!(v >= 0.0)) throw DomainError("ground truth has a negative or NaN entry");
    q_total += v;
  }
  if (!(q_total > 0.0)) throw DomainError("ground truth has zero total mass");
  const double n = static_cast<double>(pd.size());
  double mean = 0.0;
  for (double v : pd) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : pd) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  // Relative cutoff: a constant map normalized to unit mass keeps rounding noise.
  if (!(sd > 1e-12 * std::abs(mean))) throw DegeneratePredictionError("NSS is undefined for a constant prediction map");
  double acc = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) acc += (pd[i] - mean) / sd * qd[i];
  return acc / q_total;
}

const SliceStats& MetricReport::find(const std::string& slice, const std::string& metric) const {
  for (const auto& s : stats)
    if (s.slice == slice && s.metric == metric) return s;
  throw InputError("report has no " + metric + " entry for slice '" + slice + "'");
}

std::vector<std::string> all_slice_families() {
  return {"overall", "class", "partition", "scale", "attribute", "longtail"};
}

namespace {

std::vector<std::string> slices_for(const SampleRecord& r, const std::vector<std::string>& families,
                                    const std::map<std::string, std::string>& head_tail) {
  auto has = [&](const char* f) { return std::find(families.begin(), families.end(), f) != families.end(); };
  std::vector<std::string> out;
  if (has("overall")) out.push_back("overall");
  if (has("class")) out.push_back("class:" + r.affordance);
  if (has("partition")) out.push_back(to_string(r.seen_partition));
  for (const char* a : {"Big", "Middle", "Small"})
    if (has("scale") && r.has_attribute(a)) out.push_back(a);
  for (const char* a : {"BC", "NCP", "MO"})
    if (has("attribute") && r.has_attribute(a)) out.push_back(a);
  if (has("longtail")) out.push_back(head_tail.at(r.affordance));
  return out;
}

void add_stats(std::vector<SliceStats>& out, const std::string& slice, const std::string& metric,
               const std::vector<double>& values) {
  if (values.empty()) return;
  SliceStats s{slice, metric, 0.0, 0.0, values.size()};
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.std += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(values.size()));
  out.push_back(s);
}

}  // namespace

MetricReport evaluate_set(const std::filesystem::path& heatmap_dir, const Manifest& manifest,
                          const std::vector<std::string>& slice_families) {
  for (const auto& f : slice_families) {
    const auto all = all_slice_families();
    if (std::find(all.begin(), all.end(), f) == all.end()) throw ConfigError("unknown slice family '" + f + "'");
  }
  const auto head_tail = head_tail_split(manifest.records);
  MetricReport report;
  std::vector<std::string> slice_order;
  for (const auto& r : manifest.records) {
    if (r.split != Split::kTest || r.role != Role::kEgocentric) continue;
    const auto pred_path = heatmap_dir / (r.id + "." + r.affordance + ".ftm");
    if (!std::filesystem::exists(pred_path)) {
      report.missing.push_back(r.id);
      continue;
    }
    const Tensor pred = load_ftm(pred_path);
    const Tensor gt = load_ftm(manifest.resolve(*r.gt_heatmap_path));
    const HeatmapPair pair(pred, gt);
    ImageMetrics m;
    m.id = r.id;
    m.affordance = r.affordance;
    m.kld = kld(pair);
    m.sim = sim(pair);
    try {
      m.nss = nss(pair);
    } catch (const DegeneratePredictionError&) {
      m.nss = 0.0;  // a flat prediction carries no ranking information
    }
    const auto mask = top_mass_mask(normalize_mass(gt), 0.5);
    m.hit = mask[argmax(pred)];
    const HeatmapPair uniform(Tensor::full(gt.shape(), 1.0), gt);
    m.uniform_kld = kld(uniform);
    m.uniform_sim = sim(uniform);
    m.slices = slices_for(r, slice_families, head_tail);
    for (const auto& s : m.slices)
      if (std::find(slice_order.begin(), slice_order.end(), s) == slice_order.end()) slice_order.push_back(s);
    report.rows.push_back(std::move(m));
  }

  // Presentation order follows the family list; classes sort by name.
  const std::vector<std::string> fixed{"overall", to_string(SeenPartition::kSeen), to_string(SeenPartition::kUnseen),
                                       "Big", "Middle", "Small", "BC", "NCP", "MO", "Head", "Tail"};
  auto rank = [&](const std::string& s) {
    if (s.starts_with("class:")) return std::pair<std::size_t, std::string>(1, s);
    const auto pos = static_cast<std::size_t>(std::find(fixed.begin(), fixed.end(), s) - fixed.begin());
    return std::pair<std::size_t, std::string>(pos == 0 ? 0 : pos + 1, {});
  };
  std::sort(slice_order.begin(), slice_order.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
  for (const auto& slice : slice_order) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& m : report.rows) {
      if (std::find(m.slices.begin(), m.slices.end(), slice) == m.slices.end()) continue;
      values["KLD"].push_back(m.kld);
      values["SIM"].push_back(m.sim);
      values["NSS"].push_back(m.nss);
      values["HIT"].push_back(m.hit ? 1.0 : 0.0);
      values["UNIFORM_KLD"].push_back(m.uniform_kld);
      values["UNIFORM_SIM"].push_back(m.uniform_sim);
    }
    for (const char* metric : {"KLD", "SIM", "NSS", "HIT", "UNIFORM_KLD", "UNIFORM_SIM"})
      add_stats(report.stats, slice, metric, values[metric]);
  }
  return report;
}

void write_report_csv(std::ostream& out, const MetricReport& report) {
  out << "slice,metric,mean,std,n\n";
  out << std::setprecision(17);
  for (const auto& s : report.stats) out << s.slice << ',' << s.metric << ',' << s.mean << ',' << s.std << ',' << s.n << '\n';
}

std::vector<SliceStats> read_report_csv(std::istream& in) {
  std::vector<SliceStats> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "slice,metric,mean,std,n") throw ParseError("unexpected report header", lineno);
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 5) throw ParseError("expected 5 columns", lineno);
    try {
      out.push_back({cols[0], cols[1], std::stod(cols[2]), std::stod(cols[3]), std::stoul(cols[4])});
    } catch (const std::exception&) {
      throw ParseError("malformed number", lineno);
    }
  }
  return out;
}

void write_per_image_csv(std::ostream& out, const MetricReport& report) {
  out << "id,affordance,kld,sim,nss,hit,uniform_kld,uniform_sim\n" << std::setprecision(17);
  for (const auto& m : report.rows)
    out << m.id << ',' << m.affordance << ',' << m.kld << ',' << m.sim << ',' << m.nss << ',' << (m.hit ? 1 : 0) << ','
        << m.uniform_kld << ',' << m.uniform_sim << '\n';
}

void write_report_table(std::ostream& out, const std::vector<SliceStats>& stats,
                        const std::vector<std::string>& slice_prefixes) {
  std::vector<std::string> slices;
  for (const auto& s : stats) {
    const bool wanted = slice_prefixes.empty() ||
                        std::any_of(slice_prefixes.begin(), slice_prefixes.end(),
                                    [&](const std::string& p) { return s.slice.rfind(p, 0) == 0; });
    if (wanted && std::find(slices.begin(), slices.end(), s.slice) == slices.end()) slices.push_back(s.slice);
  }
  auto lookup = [&](const std::string& slice, const char* metric) -> const SliceStats* {
    for (const auto& s : stats)
      if (s.slice == slice && s.metric == metric) return &s;
    return nullptr;
  };
  out << std::left << std::setw(18) << "slice" << std::right << std::setw(8) << "n" << std::setw(10) << "KLD" << std::setw(10)
      << "SIM" << std::setw(10) << "NSS" << '\n';
  out << std::string(56, '-') << '\n';
  out << std::fixed << std::setprecision(3);
  for (const auto& slice : slices) {
    const SliceStats* k = lookup(slice, "KLD");
    out << std::left << std::setw(18) << slice << std::right << std::setw(8) << (k ? k->n : 0);
    for (const char* metric : {"KLD", "SIM", "NSS"}) {
      const SliceStats* s = lookup(slice, metric);
      if (s) {
        out << std::setw(10) << s->mean;
      } else {
        out << std::setw(10) << "-";
      }
    }
    out << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace xview
