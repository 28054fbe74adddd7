#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xview/config.hpp"
#include "xview/dataset.hpp"
#include "xview/model.hpp"

namespace xview {

// One egocentric image and N exocentric images of the same affordance.
struct TrainingInstance {
  SampleRecord ego;
  std::vector<SampleRecord> exo;
  std::size_t label = 0;
};

// Pairs every egocentric training record with n_exo exocentric training
// records of its label, drawn without replacement (with replacement when the
// label has fewer than n_exo).
std::vector<TrainingInstance> build_instances(const Manifest& manifest, std::size_t n_exo, std::uint64_t seed);

// Decoded images of one instance, already augmented.
struct InstanceImages {
  Tensor ego;
  std::vector<Tensor> exo;
  std::size_t label = 0;
};

// SGD with momentum and decoupled-looking weight decay:
//   v <- mu v + g;  theta <- theta - lr (v + wd theta).
class SgdOptimizer {
 public:
  SgdOptimizer(double lr, double momentum, double weight_decay);

  void step(const NamedParams& params);

  std::map<std::string, Tensor>& velocities() { return velocity_; }
  const std::map<std::string, Tensor>& velocities() const { return velocity_; }

 private:
  double lr_;
  double momentum_;
  double weight_decay_;
  std::map<std::string, Tensor> velocity_;
};

// Scalar loss components (batch means).
struct LossValues {
  double cls = 0.0;
  double acp = 0.0;
  double kt = 0.0;
  double total = 0.0;
};

// Forward/backward over each instance (loss scaled by 1/B), one optimizer
// step, then the momentum update of W0 with the batch-mean converged W.
// Returns batch-mean losses. A non-finite loss raises TrainingError.
LossValues train_step(Model& model, SgdOptimizer& optimizer, std::span<const InstanceImages> batch,
                         const TrainConfig& config, Rng& rng);

struct LossLogRow {
  int epoch = 0;          // 1-based
  std::size_t step = 0;   // 1-based, counted across epochs
  LossValues losses;
};

void write_loss_log(std::ostream& out, const std::vector<LossLogRow>& rows);
std::vector<LossLogRow> read_loss_log(std::istream& in);
// Mean total loss per epoch, in epoch order.
std::vector<double> epoch_mean_totals(const std::vector<LossLogRow>& rows);

struct TrainOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;  // checkpoint written by an earlier run
  std::ostream* progress = nullptr;
};

struct TrainResult {
  Model model;
  std::vector<LossLogRow> log;
  std::filesystem::path checkpoint;
};

inline constexpr const char* kCheckpointFile = "checkpoint.ftm";
inline constexpr const char* kLossLogFile = "loss.csv";

// Trains on the manifest's training split. The checkpoint (model, W0,
// optimizer state, completed epoch count) is rewritten after every epoch, and
// state is rounded to f32 at each epoch boundary so a resumed run continues
// exactly as the uninterrupted one would.
TrainResult train(const Manifest& manifest, const TrainConfig& config, const TrainOptions& options);

}  // namespace xview
