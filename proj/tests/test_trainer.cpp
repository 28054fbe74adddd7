#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "xview/errors.hpp"
#include "xview/ftm.hpp"
#include "xview/image.hpp"
#include "xview/ops.hpp"
#include "xview/trainer.hpp"

namespace xview {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("xview_test_trainer_" + name);
  fs::remove_all(dir);
  return dir;
}

// Two classes, 32 px images; small enough that a run takes well under a second.
const Manifest& small_manifest() {
  static const Manifest m = [] {
    SyntheticSpec spec;
    spec.n_classes = 2;
    spec.n_ego = 6;
    spec.n_exo_per_class = 5;
    spec.image_size = 32;
    spec.seed = 3;
    return load_manifest(generate_synthetic(fresh_dir("data"), spec));
  }();
  return m;
}

TrainConfig small_config() {
  TrainConfig c = TrainConfig::for_profile(Profile::kToy);
  c.input_size = 32;
  c.stem_channels = 4;
  c.stage_channels = {4, 8};
  c.channels = 4;
  c.rank = 3;
  c.head_channels = 8;
  c.batch_size = 4;
  c.epochs = 2;
  c.seed = 11;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

SampleRecord record(const std::string& id, Role role, const std::string& aff, Split split = Split::kTrain) {
  SampleRecord r;
  r.id = id;
  r.role = role;
  r.affordance = aff;
  r.split = split;
  return r;
}

TEST(BuildInstances, PairsWithinLabelWithoutReplacement) {
  Manifest m;
  for (int i = 0; i < 3; ++i) m.records.push_back(record("e" + std::to_string(i), Role::kEgocentric, i % 2 ? "b" : "a"));
  for (int i = 0; i < 5; ++i) m.records.push_back(record("xa" + std::to_string(i), Role::kExocentric, "a"));
  for (int i = 0; i < 4; ++i) m.records.push_back(record("xb" + std::to_string(i), Role::kExocentric, "b"));
  m.records.push_back(record("xa_test", Role::kExocentric, "a", Split::kTest));
  const auto inst = build_instances(m, 3, 5);
  ASSERT_EQ(inst.size(), 3u);
  for (const auto& t : inst) {
    EXPECT_EQ(t.label, t.ego.affordance == "a" ? 0u : 1u);
    ASSERT_EQ(t.exo.size(), 3u);
    std::set<std::string> ids;
    for (const auto& e : t.exo) {
      EXPECT_EQ(e.affordance, t.ego.affordance);
      EXPECT_EQ(e.split, Split::kTrain);
      ids.insert(e.id);
    }
    EXPECT_EQ(ids.size(), 3u);
  }
  // Same seed, same pairing.
  const auto again = build_instances(m, 3, 5);
  for (std::size_t i = 0; i < inst.size(); ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(inst[i].exo[j].id, again[i].exo[j].id);
}

TEST(BuildInstances, SmallPoolAndMissingLabel) {
  Manifest m;
  m.records.push_back(record("e", Role::kEgocentric, "a"));
  m.records.push_back(record("x", Role::kExocentric, "a"));
  const auto inst = build_instances(m, 3, 1);
  ASSERT_EQ(inst[0].exo.size(), 3u);
  for (const auto& e : inst[0].exo) EXPECT_EQ(e.id, "x");

  m.records.push_back(record("lonely", Role::kEgocentric, "b"));
  try {
    build_instances(m, 1, 1);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

std::vector<InstanceImages> small_batch(const Manifest& m, const TrainConfig& c) {
  std::vector<InstanceImages> batch;
  for (const auto& inst : build_instances(m, c.n_exo, 1)) {
    InstanceImages imgs;
    imgs.label = inst.label;
    imgs.ego = image_to_tensor(read_png(m.resolve(inst.ego.image_path)));
    for (const auto& e : inst.exo) imgs.exo.push_back(image_to_tensor(read_png(m.resolve(e.image_path))));
    batch.push_back(std::move(imgs));
    if (batch.size() == 4) break;
  }
  return batch;
}

TEST(TrainStep, ZeroLearningRateKeepsParameters) {
  const TrainConfig c = small_config();
  Model model(ModelConfig::from_train_config(c, 2), small_manifest().class_names(), 1);
  std::map<std::string, std::vector<double>> before;
  for (const auto& [name, p] : model.parameters()) before[name].assign(p.data().begin(), p.data().end());
  const std::vector<double> w0(model.dictionary.W0.data().begin(), model.dictionary.W0.data().end());
  SgdOptimizer opt(0.0, c.sgd_momentum, c.weight_decay);
  Rng rng(2);
  const LossValues l = train_step(model, opt, small_batch(small_manifest(), c), c, rng);
  EXPECT_TRUE(std::isfinite(l.total));
  for (const auto& [name, p] : model.parameters())
    EXPECT_EQ(std::vector<double>(p.data().begin(), p.data().end()), before[name]) << name;
  EXPECT_NE(std::vector<double>(model.dictionary.W0.data().begin(), model.dictionary.W0.data().end()), w0);
  for (double v : model.dictionary.W0.data()) EXPECT_GE(v, 0.0);
}

TEST(TrainStep, LambdaDecomposition) {
  TrainConfig c = small_config();
  c.lambdas = LossWeights{0.7, 0.3, 1.9};
  Model model(ModelConfig::from_train_config(c, 2), small_manifest().class_names(), 4);
  SgdOptimizer opt(c.lr, c.sgd_momentum, c.weight_decay);
  Rng rng(5);
  const auto batch = small_batch(small_manifest(), c);
  for (int i = 0; i < 3; ++i) {
    const LossValues l = train_step(model, opt, batch, c, rng);
    EXPECT_NEAR(l.total, 0.7 * l.cls + 0.3 * l.acp + 1.9 * l.kt, 1e-10);
  }
}

// Four fixed instances at toy scale: repeated steps must fit them.
TEST(TrainStep, OverfitsFourInstances) {
  SyntheticSpec spec;
  spec.n_classes = 2;
  spec.n_ego = 3;
  spec.n_exo_per_class = 4;
  const Manifest m = load_manifest(generate_synthetic(fresh_dir("overfit"), spec));
  const TrainConfig c = TrainConfig::for_profile(Profile::kToy);
  Model model(ModelConfig::from_train_config(c, 2), m.class_names(), c.seed);
  SgdOptimizer opt(c.lr, c.sgd_momentum, c.weight_decay);
  const auto batch = small_batch(m, c);
  ASSERT_EQ(batch.size(), 4u);
  Rng rng(1);
  const double initial = train_step(model, opt, batch, c, rng).cls;
  double last = initial;
  for (int step = 1; step < 200; ++step) last = train_step(model, opt, batch, c, rng).cls;
  EXPECT_LE(last, 0.5 * initial) << "initial " << initial;
}

TEST(Sgd, UpdateRule) {
  Tensor p({2}, {1.0, -2.0}, true);
  SgdOptimizer opt(0.1, 0.5, 0.01);
  const NamedParams params{{"p", p}};
  backward(ops::sum(p));
  opt.step(params);
  // v = g = 1; theta = theta - 0.1 (1 + 0.01 theta)
  EXPECT_DOUBLE_EQ(p.at(0), 1.0 - 0.1 * (1.0 + 0.01 * 1.0));
  EXPECT_DOUBLE_EQ(opt.velocities().at("p").at(0), 1.0);
  opt.step(params);  // same gradient still stored: v = 0.5 + 1
  EXPECT_DOUBLE_EQ(opt.velocities().at("p").at(0), 1.5);
}

TEST(LossLog, RoundTripAndEpochMeans) {
  const std::vector<LossLogRow> rows{{1, 1, {1.0, 0.5, 0.25, 1.375}}, {1, 2, {0.1 + 0.2, 0.0, 0.0, 0.3}},
                                     {2, 3, {0.5, 0.5, 0.5, 1.0}}};
  std::stringstream ss;
  write_loss_log(ss, rows);
  EXPECT_EQ(ss.str().substr(0, 35), "epoch,step,l_cls,l_acp,l_kt,total\n1");
  const auto back = read_loss_log(ss);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].losses.cls, 0.1 + 0.2);
  EXPECT_EQ(back[2].step, 3u);
  const auto means = epoch_mean_totals(back);
  ASSERT_EQ(means.size(), 2u);
  EXPECT_DOUBLE_EQ(means[0], (1.375 + 0.3) / 2.0);
  EXPECT_DOUBLE_EQ(means[1], 1.0);
}

TEST(Train, ZeroEpochsSavesInitialization) {
  TrainConfig c = small_config();
  c.epochs = 0;
  const fs::path out = fresh_dir("zero");
  const TrainResult r = train(small_manifest(), c, TrainOptions{out, std::nullopt, nullptr});
  EXPECT_TRUE(r.log.empty());
  const TensorArchive saved = load_archive(out / kCheckpointFile);
  Model init(ModelConfig::from_train_config(c, 2), small_manifest().class_names(), c.seed);
  for (const auto& [name, p] : init.parameters()) {
    const Tensor& s = saved.at(name);
    for (std::size_t i = 0; i < p.numel(); ++i) ASSERT_EQ(s.at(i), static_cast<double>(static_cast<float>(p.at(i)))) << name;
  }
  EXPECT_EQ(saved.at("meta/epoch").item(), 0.0);
}

TEST(Train, DeterministicCheckpoints) {
  const TrainConfig c = small_config();
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  train(small_manifest(), c, TrainOptions{a, std::nullopt, nullptr});
  train(small_manifest(), c, TrainOptions{b, std::nullopt, nullptr});
  EXPECT_EQ(slurp(a / kCheckpointFile), slurp(b / kCheckpointFile));
  EXPECT_EQ(slurp(a / kLossLogFile), slurp(b / kLossLogFile));

  TrainConfig other = c;
  other.seed = 12;
  const fs::path d = fresh_dir("det_d");
  train(small_manifest(), other, TrainOptions{d, std::nullopt, nullptr});
  EXPECT_NE(slurp(a / kCheckpointFile), slurp(d / kCheckpointFile));
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  TrainConfig c = small_config();
  c.epochs = 3;
  const fs::path full = fresh_dir("resume_full");
  const TrainResult whole = train(small_manifest(), c, TrainOptions{full, std::nullopt, nullptr});

  TrainConfig first = c;
  first.epochs = 1;
  const fs::path part = fresh_dir("resume_part");
  train(small_manifest(), first, TrainOptions{part, std::nullopt, nullptr});
  const fs::path rest = fresh_dir("resume_rest");
  const TrainResult resumed = train(small_manifest(), c, TrainOptions{rest, part / kCheckpointFile, nullptr});

  EXPECT_EQ(slurp(full / kCheckpointFile), slurp(rest / kCheckpointFile));
  std::vector<LossLogRow> tail;
  for (const auto& r : whole.log)
    if (r.epoch > 1) tail.push_back(r);
  ASSERT_EQ(tail.size(), resumed.log.size());
  for (std::size_t i = 0; i < tail.size(); ++i) {
    EXPECT_EQ(tail[i].epoch, resumed.log[i].epoch);
    EXPECT_EQ(tail[i].step, resumed.log[i].step);
    EXPECT_EQ(tail[i].losses.total, resumed.log[i].losses.total);
  }
}

TEST(Train, LogAndDictionaryInvariants) {
  const TrainConfig c = small_config();
  const fs::path out = fresh_dir("log");
  const TrainResult r = train(small_manifest(), c, TrainOptions{out, std::nullopt, nullptr});
  // 2 classes x 4 training ego images, batch 4 -> 2 steps per epoch.
  ASSERT_EQ(r.log.size(), 4u);
  for (const auto& row : r.log) {
    EXPECT_TRUE(std::isfinite(row.losses.total));
    EXPECT_NEAR(row.losses.total, c.lambdas.cls * row.losses.cls + c.lambdas.acp * row.losses.acp + c.lambdas.kt * row.losses.kt,
                1e-10);
  }
  std::ifstream log(out / kLossLogFile);
  EXPECT_EQ(read_loss_log(log).size(), 4u);
  for (double v : r.model.dictionary.W0.data()) EXPECT_GE(v, 0.0);
}

TEST(Train, ResumeRejectsForeignClasses) {
  const fs::path out = fresh_dir("foreign");
  TrainConfig c = small_config();
  c.epochs = 0;
  train(small_manifest(), c, TrainOptions{out, std::nullopt, nullptr});
  Manifest other = small_manifest();
  for (auto& rec : other.records) rec.affordance += "_x";
  EXPECT_THROW(train(other, c, TrainOptions{fresh_dir("foreign2"), out / kCheckpointFile, nullptr}), FormatError);
}

}  // namespace
}  // namespace xview
