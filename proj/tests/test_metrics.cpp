#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "support/oracles.hpp"
#include "xview/dataset.hpp"
#include "xview/errors.hpp"
#include "xview/ftm.hpp"
#include "xview/metrics.hpp"
#include "xview/rng.hpp"

namespace xview {
namespace {

namespace fs = std::filesystem;
using testing::oracle::Oracle;

// Values exactly representable in f32 so files on disk hold the same numbers.
Tensor random_map(std::size_t h, std::size_t w, Rng& rng, double zero_prob = 0.0) {
  std::vector<double> v(h * w);
  for (double& x : v) x = rng.uniform() < zero_prob ? 0.0 : static_cast<float>(rng.uniform(0.0, 1.0));
  v[rng.index(v.size())] = 0.75;  // never all zero
  return Tensor({h, w}, std::move(v));
}

TEST(Kld, IdenticalIsZero) {
  const Tensor u = Tensor::full({2, 2}, 0.25);
  EXPECT_NEAR(kld(HeatmapPair(u, u)), 0.0, 1e-9);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor p = random_map(6, 6, rng, 0.3);
    EXPECT_LE(std::abs(kld(HeatmapPair(p, p))), 1e-9);
  }
}

TEST(Kld, HandExample) {
  EXPECT_NEAR(kld(HeatmapPair(Tensor({2}, {0.5, 0.5}), Tensor({2}, {1.0, 0.0}))), std::log(2.0), 1e-9);
}

TEST(Kld, DomainErrors) {
  EXPECT_THROW(kld(HeatmapPair(Tensor({2}, {-0.1, 1.1}), Tensor({2}, {0.5, 0.5}))), DomainError);
  EXPECT_THROW(kld(HeatmapPair(Tensor({2}, {0.5, 0.5}), Tensor({2}, {0.0, 0.0}))), DomainError);
  EXPECT_THROW(HeatmapPair(Tensor::zeros({2, 2}), Tensor::zeros({4})), ShapeError);
}

TEST(Sim, Examples) {
  const Tensor p({2}, {0.7, 0.3}), q({2}, {0.4, 0.6});
  EXPECT_NEAR(sim(HeatmapPair(p, q)), 0.7, 1e-15);
  EXPECT_NEAR(sim(HeatmapPair(p, p)), 1.0, 1e-15);
  EXPECT_EQ(sim(HeatmapPair(Tensor({2}, {1.0, 0.0}), Tensor({2}, {0.0, 1.0}))), 0.0);
}

TEST(Sim, SymmetricAndBounded) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor p = random_map(5, 7, rng, 0.2), q = random_map(5, 7, rng, 0.2);
    const double a = sim(HeatmapPair(p, q)), b = sim(HeatmapPair(q, p));
    EXPECT_NEAR(a, b, 1e-15);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0 + 1e-15);
  }
}

TEST(Nss, ConstantPredictionIsDegenerate) {
  EXPECT_THROW(nss(HeatmapPair(Tensor::full({3, 3}, 0.2), Tensor::full({3, 3}, 1.0))), DegeneratePredictionError);
}

TEST(Nss, AffineInvariance) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor p = random_map(6, 6, rng), q = random_map(6, 6, rng);
    std::vector<double> moved(p.data().begin(), p.data().end());
    for (double& v : moved) v = 2.0 * v + 3.0;
    EXPECT_NEAR(nss(HeatmapPair(p, q)), nss(HeatmapPair(Tensor(p.shape(), moved), q)), 1e-10);
  }
}

TEST(Nss, OneHotAtMaximum) {
  Rng rng(4);
  const Tensor p = random_map(4, 4, rng);
  std::size_t best = 0;
  for (std::size_t i = 0; i < 16; ++i)
    if (p.at(i) > p.at(best)) best = i;
  std::vector<double> q(16, 0.0);
  q[best] = 1.0;
  double mu = 0.0, var = 0.0;
  for (double v : p.data()) mu += v / 16.0;
  for (double v : p.data()) var += (v - mu) * (v - mu) / 16.0;
  EXPECT_NEAR(nss(HeatmapPair(p, Tensor({4, 4}, q))), (p.at(best) - mu) / std::sqrt(var), 1e-12);
}

TEST(Metrics, RandomPairsMatchOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = 2 + rng.index(10), w = 2 + rng.index(10);
    const Tensor p = random_map(h, w, rng, trial % 3 == 0 ? 0.4 : 0.0);
    const Tensor q = random_map(h, w, rng, 0.3);
    const HeatmapPair pair(p, q);
    EXPECT_NEAR(kld(pair), Oracle::kld(p, q), 1e-10);
    EXPECT_NEAR(sim(pair), Oracle::sim(p, q), 1e-10);
    EXPECT_NEAR(nss(pair), Oracle::nss(p, q), 1e-10);
  }
}

class EvaluateSet : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("xview_test_metrics_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_ / "gt");
    fs::create_directories(root_ / "pred");
    manifest_.root = root_;
  }

  void add(const std::string& id, const std::string& aff, const Tensor& gt, const Tensor* pred,
           SeenPartition part = SeenPartition::kSeen, std::vector<std::string> attrs = {"Big"}) {
    SampleRecord r;
    r.id = id;
    r.role = Role::kEgocentric;
    r.affordance = aff;
    r.object = "obj";
    r.split = Split::kTest;
    r.seen_partition = part;
    r.image_path = "images/" + id + ".png";
    r.gt_heatmap_path = "gt/" + id + ".ftm";
    r.attributes = std::move(attrs);
    save_ftm(root_ / *r.gt_heatmap_path, gt);
    if (pred) save_ftm(root_ / "pred" / (id + "." + aff + ".ftm"), *pred);
    manifest_.records.push_back(r);
  }

  fs::path root_;
  Manifest manifest_;
};

TEST_F(EvaluateSet, SinglePerfectPrediction) {
  Rng rng(6);
  const Tensor gt = random_map(8, 8, rng);
  add("a", "cut", gt, &gt);
  const MetricReport report = evaluate_set(root_ / "pred", manifest_);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_NEAR(report.find("overall", "KLD").mean, 0.0, 1e-9);
  EXPECT_NEAR(report.find("overall", "SIM").mean, 1.0, 1e-12);
  EXPECT_EQ(report.find("overall", "HIT").mean, 1.0);
  EXPECT_TRUE(report.missing.empty());
}

TEST_F(EvaluateSet, MeansAndPopulationStd) {
  Rng rng(7);
  const Tensor g1 = random_map(8, 8, rng), g2 = random_map(8, 8, rng);
  const Tensor p1 = random_map(8, 8, rng), p2 = random_map(8, 8, rng);
  add("a", "cut", g1, &p1);
  add("b", "hold", g2, &p2, SeenPartition::kUnseen, {"Small", "BC"});
  const MetricReport report = evaluate_set(root_ / "pred", manifest_);
  const double k1 = Oracle::kld(p1, g1), k2 = Oracle::kld(p2, g2);
  EXPECT_NEAR(report.find("overall", "KLD").mean, 0.5 * (k1 + k2), 1e-10);
  EXPECT_NEAR(report.find("overall", "KLD").std, 0.5 * std::abs(k1 - k2), 1e-10);
  EXPECT_EQ(report.find("overall", "KLD").n, 2u);
  EXPECT_NEAR(report.find("class:hold", "SIM").mean, Oracle::sim(p2, g2), 1e-10);
  EXPECT_EQ(report.find("BC", "NSS").n, 1u);
  EXPECT_NEAR(report.find(to_string(SeenPartition::kUnseen), "NSS").mean, Oracle::nss(p2, g2), 1e-10);
  EXPECT_THROW(report.find("MO", "KLD"), InputError);
  // Overall leads and classes come before partitions.
  EXPECT_EQ(report.stats.front().slice, "overall");
}

TEST_F(EvaluateSet, TwentyImagesMatchOracle) {
  Rng rng(8);
  std::vector<Tensor> gts, preds;
  const char* affs[] = {"cut", "hold", "pour"};
  for (int i = 0; i < 20; ++i) {
    gts.push_back(random_map(10, 12, rng, 0.5));
    preds.push_back(random_map(10, 12, rng, 0.1));
    add("img" + std::to_string(i), affs[i % 3], gts.back(), &preds.back(),
        i % 2 ? SeenPartition::kSeen : SeenPartition::kUnseen, {i % 4 ? "Middle" : "Big"});
  }
  const MetricReport report = evaluate_set(root_ / "pred", manifest_);
  for (const char* aff : affs) {
    double k = 0.0, s = 0.0, n = 0.0;
    int count = 0;
    for (int i = 0; i < 20; ++i) {
      if (std::string(affs[i % 3]) != aff) continue;
      k += Oracle::kld(preds[i], gts[i]);
      s += Oracle::sim(preds[i], gts[i]);
      n += Oracle::nss(preds[i], gts[i]);
      ++count;
    }
    const std::string slice = std::string("class:") + aff;
    EXPECT_NEAR(report.find(slice, "KLD").mean, k / count, 1e-10);
    EXPECT_NEAR(report.find(slice, "SIM").mean, s / count, 1e-10);
    EXPECT_NEAR(report.find(slice, "NSS").mean, n / count, 1e-10);
  }
  double overall = 0.0;
  for (int i = 0; i < 20; ++i) overall += Oracle::kld(preds[i], gts[i]);
  EXPECT_NEAR(report.find("overall", "KLD").mean, overall / 20.0, 1e-10);
}

TEST_F(EvaluateSet, MissingPredictionListedAndExcluded) {
  Rng rng(9);
  const Tensor gt = random_map(6, 6, rng);
  add("present", "cut", gt, &gt);
  add("absent", "cut", gt, nullptr);
  const MetricReport report = evaluate_set(root_ / "pred", manifest_);
  ASSERT_EQ(report.missing.size(), 1u);
  EXPECT_EQ(report.missing[0], "absent");
  EXPECT_EQ(report.find("overall", "SIM").n, 1u);
}

TEST_F(EvaluateSet, UnknownSliceFamily) {
  EXPECT_THROW(evaluate_set(root_ / "pred", manifest_, {"colour"}), ConfigError);
}

TEST(ReportCsv, RoundTrip) {
  MetricReport report;
  report.stats = {{"overall", "KLD", 1.0 / 3.0, 0.125, 7}, {"class:cut", "SIM", 0.5, 0.0, 2}};
  std::stringstream ss;
  write_report_csv(ss, report);
  EXPECT_EQ(ss.str().substr(0, 24), "slice,metric,mean,std,n\n");
  const auto back = read_report_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].mean, 1.0 / 3.0);
  EXPECT_EQ(back[1].slice, "class:cut");
  EXPECT_EQ(back[0].n, 7u);

  std::stringstream bad("slice,metric\n");
  EXPECT_THROW(read_report_csv(bad), ParseError);
}

TEST(ReportTable, HasColumns) {
  std::ostringstream out;
  write_report_table(out, {{"overall", "KLD", 1.5, 0.1, 3}, {"overall", "SIM", 0.4, 0.1, 3}, {"overall", "NSS", 1.2, 0.3, 3}});
  const std::string s = out.str();
  EXPECT_NE(s.find("KLD"), std::string::npos);
  EXPECT_NE(s.find("overall"), std::string::npos);
  EXPECT_NE(s.find("1.500"), std::string::npos);
}

}  // namespace
}  // namespace xview
