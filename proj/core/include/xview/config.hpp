#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xview/aim.hpp"
#include "xview/cft.hpp"
#include "xview/encoder.hpp"
#include "xview/head.hpp"

namespace xview {

// Flat key=value settings as read from a config file (UTF-8, '#' comments).
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::filesystem::path& path);

enum class Profile { kToy, kPaper };

Profile parse_profile(const std::string& name);
std::string profile_name(Profile profile);

struct TrainConfig {
  Profile profile = Profile::kToy;

  // Optimisation.
  double lr = 1e-3;
  int epochs = 35;
  std::size_t batch_size = 32;
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;

  // Pairing and losses.
  std::size_t n_exo = 3;
  LossWeights lambdas{};
  double temperature = 1.0;

  // Dictionary.
  double alpha = 0.9;
  std::size_t rank = 64;
  std::size_t channels = 64;
  int nmf_iters = 6;
  int refine_iters = 6;
  bool adapt_dictionary = true;
  KtForm kt_form = KtForm::kMeanSquare;

  // Architecture.
  WeightInit encoder_init = WeightInit::kHe;
  std::size_t input_size = 224;
  std::size_t stem_channels = 64;
  std::vector<std::size_t> stage_channels{128, 256, 512, 1024, 2048};
  std::size_t head_channels = 1024;

  // Augmentation: random crop to input_size when images are larger, and
  // random horizontal flip.
  bool augment_crop = true;
  bool augment_flip = true;

  static TrainConfig for_profile(Profile profile);

  // Overrides fields from `values`; unknown keys raise ConfigError.
  void apply(const KeyValues& values);
  KeyValues to_key_values() const;
  void validate() const;
};

void write_key_values(std::ostream& out, const KeyValues& values);

}  // namespace xview
