#include "xview/model.hpp"

#include <algorithm>

#include "xview/errors.hpp"
#include "xview/ops.hpp"

namespace xview {

ModelConfig ModelConfig::from_train_config(const TrainConfig& c, std::size_t num_classes) {
  ModelConfig m;
  m.encoder.input_size = c.input_size;
  m.encoder.stem_channels = c.stem_channels;
  m.encoder.stage_channels = c.stage_channels;
  m.encoder.init = c.encoder_init;
  m.aim.channels = c.channels;
  m.aim.rank = c.rank;
  m.aim.nmf_iters = c.nmf_iters;
  m.cft.channels = c.channels;
  m.cft.refine_iters = c.refine_iters;
  m.cft.adapt_dictionary = c.adapt_dictionary;
  m.cft.kt_form = c.kt_form;
  m.head.channels = c.head_channels;
  m.head.num_classes = num_classes;
  m.alpha = c.alpha;
  return m;
}

Model::Model(const ModelConfig& config, std::vector<std::string> class_names, std::uint64_t seed)
    : config_(config), class_names_(std::move(class_names)) {
  if (class_names_.size() != config.head.num_classes)
    throw ConfigError("number of class names does not match the head's class count");
  if (config.aim.channels != config.cft.channels) throw ConfigError("AIM and CFT must use the same channel count");
  Rng rng(seed);
  encoder = Encoder(config.encoder, rng);
  const std::size_t c_feat = config.encoder.feature_channels();
  aim = AimModule(c_feat, config.aim, rng);
  cft = CftModule(c_feat, config.cft, rng);
  head = Head(c_feat, config.head, rng);
  dictionary = DictionaryState::init(config.aim.channels, config.aim.rank, config.alpha, rng);
}

std::size_t Model::class_index(const std::string& name) const {
  auto it = std::find(class_names_.begin(), class_names_.end(), name);
  if (it == class_names_.end()) throw LabelError("unknown affordance class '" + name + "'");
  return static_cast<std::size_t>(it - class_names_.begin());
}

InstanceResult Model::forward_instance(const Tensor& ego_image, std::span<const Tensor> exo_images, std::size_t label,
                                       const LossWeights& weights, double temperature, Rng& rng) const {
  if (exo_images.empty()) throw InputError("a training instance needs at least one exocentric image");
  std::vector<Tensor> Z_exo;
  Z_exo.reserve(exo_images.size());
  for (const auto& img : exo_images) Z_exo.push_back(encoder.encode(img));
  const Tensor Z_ego = encoder.encode(ego_image);

  AimOutput aim_out = aim.forward(Z_exo, dictionary.W0, rng);
  CftOutput cft_out = cft.forward(Z_ego, aim_out.W);
  InstanceResult result;
  result.head = head.forward(aim_out.features, cft_out.fused);
  result.losses = total_loss(result.head.exo_logits, result.head.scores.g, label, cft_out.kt_loss, weights, temperature);
  result.W_batch = aim_out.W;
  return result;
}

Tensor Model::egocentric_features(const Tensor& image) const {
  const Tensor Z = encoder.encode(image);
  return head.features(cft.forward(Z, dictionary.W0).fused);
}

NamedParams Model::parameters() const {
  NamedParams out;
  encoder.collect("encoder", out);
  aim.collect("aim", out);
  cft.collect("cft", out);
  head.collect("head", out);
  return out;
}

namespace {

Tensor vector_tensor(const std::vector<double>& v) { return Tensor({v.size()}, v); }

std::vector<std::size_t> read_uints(const TensorArchive& a, const std::string& name, std::size_t min_len) {
  auto it = a.find(name);
  if (it == a.end()) throw FormatError("checkpoint is missing '" + name + "'");
  std::vector<std::size_t> out;
  for (double v : it->second.data()) {
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw FormatError("checkpoint entry '" + name + "' is not a list of integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.size() < min_len) throw FormatError("checkpoint entry '" + name + "' is too short");
  return out;
}

}  // namespace

TensorArchive Model::to_archive() const {
  TensorArchive a;
  for (const auto& [name, t] : parameters()) a.emplace(name, t.detach());
  a.emplace("aim/W0", dictionary.W0.detach());

  std::vector<double> enc{static_cast<double>(config_.encoder.input_size),
                          static_cast<double>(config_.encoder.stem_channels)};
  for (std::size_t c : config_.encoder.stage_channels) enc.push_back(static_cast<double>(c));
  a.emplace("meta/encoder", vector_tensor(enc));
  a.emplace("meta/aim", vector_tensor({static_cast<double>(config_.aim.channels), static_cast<double>(config_.aim.rank),
                                       static_cast<double>(config_.aim.nmf_iters)}));
  a.emplace("meta/cft", vector_tensor({static_cast<double>(config_.cft.channels),
                                       static_cast<double>(config_.cft.refine_iters),
                                       config_.cft.adapt_dictionary ? 1.0 : 0.0,
                                       config_.cft.kt_form == KtForm::kNorm ? 0.0 : 1.0}));
  a.emplace("meta/head", vector_tensor({static_cast<double>(config_.head.channels),
                                        static_cast<double>(config_.head.num_classes)}));
  a.emplace("meta/alpha", vector_tensor({config_.alpha}));
  std::vector<double> names;
  for (const auto& n : class_names_) {
    for (unsigned char ch : n) names.push_back(static_cast<double>(ch));
    names.push_back('\n');
  }
  a.emplace("meta/classes", vector_tensor(names));
  return a;
}

Model Model::from_archive(const TensorArchive& a) {
  ModelConfig config;
  const auto enc = read_uints(a, "meta/encoder", 3);
  config.encoder.input_size = enc[0];
  config.encoder.stem_channels = enc[1];
  config.encoder.stage_channels.assign(enc.begin() + 2, enc.end());
  const auto aim_meta = read_uints(a, "meta/aim", 3);
  config.aim = AimConfig{aim_meta[0], aim_meta[1], static_cast<int>(aim_meta[2])};
  const auto cft_meta = read_uints(a, "meta/cft", 4);
  config.cft = CftConfig{cft_meta[0], static_cast<int>(cft_meta[1]), cft_meta[2] != 0,
                         cft_meta[3] == 0 ? KtForm::kNorm : KtForm::kMeanSquare};
  const auto head_meta = read_uints(a, "meta/head", 2);
  config.head = HeadConfig{head_meta[0], head_meta[1]};
  auto alpha = a.find("meta/alpha");
  if (alpha == a.end()) throw FormatError("checkpoint is missing 'meta/alpha'");
  config.alpha = alpha->second.at(0);

  std::vector<std::string> names;
  std::string cur;
  for (std::size_t v : read_uints(a, "meta/classes", 1)) {
    if (v == '\n') {
      names.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(v));
    }
  }
  if (names.size() != config.head.num_classes) throw FormatError("checkpoint class list does not match head size");

  Model model(config, std::move(names), 0);
  for (auto& [name, param] : model.parameters()) {
    auto it = a.find(name);
    if (it == a.end()) throw FormatError("checkpoint is missing parameter '" + name + "'");
    if (it->second.shape() != param.shape())
      throw FormatError("checkpoint parameter '" + name + "' has shape " + shape_string(it->second.shape()) +
                        ", expected " + shape_string(param.shape()));
    Tensor p = param;
    std::copy(it->second.data().begin(), it->second.data().end(), p.mutable_data().begin());
  }
  auto w0 = a.find("aim/W0");
  if (w0 == a.end()) throw FormatError("checkpoint is missing 'aim/W0'");
  if (w0->second.shape() != model.dictionary.W0.shape()) throw FormatError("checkpoint W0 has the wrong shape");
  model.dictionary.W0 = w0->second.detach();
  return model;
}

}  // namespace xview
