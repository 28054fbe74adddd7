#include "xview/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "xview/errors.hpp"
#include "xview/image.hpp"
#include "xview/ops.hpp"

namespace xview {

namespace {

constexpr std::uint64_t kPairingStream = 0x5041495200000000ULL;
constexpr std::uint64_t kEpochStream = 0x45504f4300000000ULL;

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

std::vector<TrainingInstance> build_instances(const Manifest& manifest, std::size_t n_exo, std::uint64_t seed) {
  if (n_exo == 0) throw ConfigError("n_exo must be at least 1");
  const auto classes = manifest.class_names();
  std::map<std::string, std::vector<const SampleRecord*>> exo_by_label;
  for (const auto& r : manifest.records)
    if (r.role == Role::kExocentric && r.split == Split::kTrain) exo_by_label[r.affordance].push_back(&r);

  Rng rng(seed);
  std::vector<TrainingInstance> out;
  for (const auto& r : manifest.records) {
    if (r.role != Role::kEgocentric || r.split != Split::kTrain) continue;
    auto it = exo_by_label.find(r.affordance);
    if (it == exo_by_label.end()) throw DatasetError("no exocentric training images for affordance '" + r.affordance + "'");
    const auto& pool = it->second;
    TrainingInstance inst;
    inst.ego = r;
    inst.label = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), r.affordance) - classes.begin());
    if (pool.size() >= n_exo) {
      std::vector<std::size_t> idx(pool.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < n_exo; ++i) {
        std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
        inst.exo.push_back(*pool[idx[i]]);
      }
    } else {
      for (std::size_t i = 0; i < n_exo; ++i) inst.exo.push_back(*pool[rng.index(pool.size())]);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

SgdOptimizer::SgdOptimizer(double lr, double momentum, double weight_decay)
    : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}

void SgdOptimizer::step(const NamedParams& params) {
  for (const auto& [name, param] : params) {
    Tensor p = param;
    auto it = velocity_.find(name);
    if (it == velocity_.end()) it = velocity_.emplace(name, Tensor::zeros(p.shape())).first;
    auto v = it->second.mutable_data();
    auto theta = p.mutable_data();
    const bool has = p.has_grad();
    auto g = p.grad();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = momentum_ * v[i] + (has ? g[i] : 0.0);
      theta[i] -= lr_ * (v[i] + weight_decay_ * theta[i]);
    }
  }
}

LossValues train_step(Model& model, SgdOptimizer& optimizer, std::span<const InstanceImages> batch,
                         const TrainConfig& config, Rng& rng) {
  if (batch.empty()) throw InputError("train_step needs a non-empty batch");
  const NamedParams params = model.parameters();
  for (const auto& [name, p] : params) Tensor(p).zero_grad();

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossValues mean;
  std::vector<Tensor> dictionaries;
  for (const auto& inst : batch) {
    InstanceResult r = model.forward_instance(inst.ego, inst.exo, inst.label, config.lambdas, config.temperature, rng);
    const double total = r.losses.total.item();
    if (!std::isfinite(total)) {
      std::ostringstream os;
      os << "non-finite loss: l_cls=" << r.losses.cls.item() << " l_acp=" << r.losses.acp.item()
         << " l_kt=" << r.losses.kt.item() << " total=" << total;
      throw TrainingError(os.str());
    }
    backward(ops::scale(r.losses.total, inv_b));
    mean.cls += r.losses.cls.item() * inv_b;
    mean.acp += r.losses.acp.item() * inv_b;
    mean.kt += r.losses.kt.item() * inv_b;
    mean.total += total * inv_b;
    dictionaries.push_back(r.W_batch);
  }
  optimizer.step(params);
  for (const auto& [name, p] : params)
    for (double v : p.data())
      if (!std::isfinite(v)) throw TrainingError("parameter " + name + " became non-finite; training diverged (try a lower lr)");
  for (const auto& [name, p] : params) Tensor(p).zero_grad();
  update_dictionary_momentum(model.dictionary, mean_dictionary(dictionaries));
  return mean;
}

void write_loss_log(std::ostream& out, const std::vector<LossLogRow>& rows) {
  out << "epoch,step,l_cls,l_acp,l_kt,total\n" << std::setprecision(17);
  for (const auto& r : rows)
    out << r.epoch << ',' << r.step << ',' << r.losses.cls << ',' << r.losses.acp << ',' << r.losses.kt << ','
        << r.losses.total << '\n';
}

std::vector<LossLogRow> read_loss_log(std::istream& in) {
  std::vector<LossLogRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "epoch,step,l_cls,l_acp,l_kt,total") throw ParseError("unexpected loss log header", lineno);
      continue;
    }
    std::stringstream ss(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 6) throw ParseError("expected 6 columns", lineno);
    try {
      rows.push_back({std::stoi(cols[0]), std::stoul(cols[1]),
                      {std::stod(cols[2]), std::stod(cols[3]), std::stod(cols[4]), std::stod(cols[5])}});
    } catch (const std::exception&) {
      throw ParseError("malformed number", lineno);
    }
  }
  return rows;
}

std::vector<double> epoch_mean_totals(const std::vector<LossLogRow>& rows) {
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const auto& r : rows) {
    acc[r.epoch].first += r.losses.total;
    acc[r.epoch].second += 1;
  }
  std::vector<double> out;
  for (const auto& [epoch, sum_n] : acc) out.push_back(sum_n.first / static_cast<double>(sum_n.second));
  return out;
}

namespace {

class ImageCache {
 public:
  explicit ImageCache(const Manifest& manifest) : manifest_(manifest) {}

  const Tensor& get(const SampleRecord& r) {
    auto it = cache_.find(r.image_path);
    if (it == cache_.end()) it = cache_.emplace(r.image_path, image_to_tensor(read_png(manifest_.resolve(r.image_path)))).first;
    return it->second;
  }

 private:
  const Manifest& manifest_;
  std::map<std::string, Tensor> cache_;
};

void round_state(Model& model, SgdOptimizer& optimizer) {
  for (auto& [name, p] : model.parameters()) {
    Tensor t = p;
    round_to_f32_inplace(t);
  }
  round_to_f32_inplace(model.dictionary.W0);
  for (auto& [name, v] : optimizer.velocities()) round_to_f32_inplace(v);
}

TensorArchive checkpoint_archive(const Model& model, const SgdOptimizer& optimizer, int epochs_done) {
  TensorArchive a = model.to_archive();
  for (const auto& [name, v] : optimizer.velocities()) a["optim/velocity/" + name] = v;
  a["meta/epoch"] = Tensor::scalar(static_cast<double>(epochs_done));
  return a;
}

}  // namespace

TrainResult train(const Manifest& manifest, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const auto classes = manifest.class_names();
  if (classes.empty()) throw DatasetError("manifest has no records");
  std::filesystem::create_directories(options.out_dir);

  SgdOptimizer optimizer(config.lr, config.sgd_momentum, config.weight_decay);
  Model model;
  int start_epoch = 0;
  if (options.resume_from) {
    const TensorArchive archive = load_archive(*options.resume_from);
    model = Model::from_archive(archive);
    if (model.class_names() != classes) throw FormatError("checkpoint classes do not match the manifest");
    // meta/alpha went through f32; the run's own value keeps resume exact.
    model.dictionary.alpha = config.alpha;
    auto it = archive.find("meta/epoch");
    if (it == archive.end()) throw FormatError("checkpoint has no training state (meta/epoch)");
    start_epoch = static_cast<int>(it->second.item());
    for (const auto& [name, t] : archive)
      if (name.rfind("optim/velocity/", 0) == 0) optimizer.velocities()[name.substr(15)] = t.detach();
  } else {
    model = Model(ModelConfig::from_train_config(config, classes.size()), classes, config.seed);
    round_state(model, optimizer);
  }

  TrainResult result;
  result.checkpoint = options.out_dir / kCheckpointFile;
  save_archive(result.checkpoint, checkpoint_archive(model, optimizer, start_epoch));

  ImageCache cache(manifest);
  std::size_t step = 0;
  for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
    Rng rng = Rng::derive(config.seed, kEpochStream + static_cast<std::uint64_t>(epoch));
    const auto instances =
        build_instances(manifest, config.n_exo,
                        Rng::derive(config.seed, kPairingStream + static_cast<std::uint64_t>(epoch)).next_u64());
    if (instances.empty()) throw DatasetError("manifest has no egocentric training records");
    std::vector<std::size_t> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    step = static_cast<std::size_t>(epoch) * ((instances.size() + config.batch_size - 1) / config.batch_size);

    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<InstanceImages> batch;
      for (std::size_t k = begin; k < end; ++k) {
        const auto& inst = instances[order[k]];
        InstanceImages imgs;
        imgs.label = inst.label;
        imgs.ego = augment(cache.get(inst.ego), config.input_size, config.augment_crop, config.augment_flip, rng);
        for (const auto& e : inst.exo)
          imgs.exo.push_back(augment(cache.get(e), config.input_size, config.augment_crop, config.augment_flip, rng));
        batch.push_back(std::move(imgs));
      }
      const LossValues losses = train_step(model, optimizer, batch, config, rng);
      result.log.push_back({epoch + 1, ++step, losses});
    }
    round_state(model, optimizer);
    save_archive(result.checkpoint, checkpoint_archive(model, optimizer, epoch + 1));
    if (options.progress) {
      double total = 0.0;
      std::size_t n = 0;
      for (const auto& r : result.log)
        if (r.epoch == epoch + 1) total += r.losses.total, ++n;
      *options.progress << "epoch " << epoch + 1 << "/" << config.epochs << " mean loss " << total / static_cast<double>(n)
                        << std::endl;
    }
  }

  std::ofstream log(options.out_dir / kLossLogFile);
  if (!log) throw IoError("cannot write " + (options.out_dir / kLossLogFile).string());
  write_loss_log(log, result.log);
  if (!log) throw IoError("failed writing loss log");
  result.model = std::move(model);
  return result;
}

}  // namespace xview
