#include "xview/aim.hpp"

#include "xview/errors.hpp"
#include "xview/ops.hpp"

namespace xview {

DictionaryState DictionaryState::init(std::size_t channels, std::size_t rank, double alpha, Rng& rng) {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("dictionary momentum must lie in [0, 1]");
  std::vector<double> w(channels * rank);
  for (double& v : w) v = rng.uniform_open_low();
  return DictionaryState{Tensor({channels, rank}, std::move(w)), alpha};
}

void update_dictionary_momentum(DictionaryState& dict, const Tensor& W_mean) {
  if (W_mean.shape() != dict.W0.shape())
    throw ShapeError("dictionary update: shape " + shape_string(W_mean.shape()) + " does not match W0 " +
                     shape_string(dict.W0.shape()));
  for (double v : W_mean.data())
    if (!(v >= 0.0)) throw DomainError("dictionary update: negative or NaN entry in batch dictionary");
  std::vector<double> out(dict.W0.numel());
  auto w0 = dict.W0.data();
  auto wm = W_mean.data();
  const double a = dict.alpha;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * w0[i] + (1.0 - a) * wm[i];
  dict.W0 = Tensor(dict.W0.shape(), std::move(out));
}

Tensor mean_dictionary(std::span<const Tensor> dictionaries) {
  if (dictionaries.empty()) throw InputError("mean_dictionary: empty batch");
  std::vector<double> out(dictionaries[0].numel(), 0.0);
  for (const auto& w : dictionaries) {
    if (w.shape() != dictionaries[0].shape()) throw ShapeError("mean_dictionary: shape mismatch");
    auto d = w.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  for (double& v : out) v /= static_cast<double>(dictionaries.size());
  return Tensor(dictionaries[0].shape(), std::move(out));
}

AimModule::AimModule(std::size_t feature_channels, const AimConfig& config, Rng& rng)
    : config_(config),
      reduce_(ConvLayer::glorot(feature_channels, config.channels, 1, 1, rng)),
      residual_(ConvLayer::glorot(config.channels, feature_channels, 1, 1, rng)) {
  if (config.rank == 0 || config.channels == 0) throw ConfigError("AIM rank and channels must be positive");
  if (config.nmf_iters < 1) throw ConfigError("AIM needs at least one NMF iteration");
}

Tensor AimModule::reduce_nonneg(const Tensor& Z) const {
  Tensor x = ops::relu(reduce_(Z));
  return ops::reshape(x, {x.dim(0), x.dim(1) * x.dim(2)});
}

AimOutput AimModule::forward(std::span<const Tensor> Z_list, const Tensor& W_init, Rng& rng) const {
  if (Z_list.empty()) throw InputError("AIM needs at least one exocentric feature map");
  const Shape zshape = Z_list[0].shape();
  for (const auto& z : Z_list)
    if (z.shape() != zshape) throw ShapeError("AIM: all exocentric feature maps must share a shape");
  const std::size_t n = Z_list.size();
  const std::size_t h = zshape[1], w = zshape[2], hw = h * w;
  const std::size_t c = config_.channels, r = config_.rank;

  // X = [X_1 .. X_N], c x (N*hw), detached.
  std::vector<double> x(c * n * hw);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor xi = reduce_nonneg(Z_list[i]);
    auto d = xi.data();
    for (std::size_t ch = 0; ch < c; ++ch)
      std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(ch * hw), hw, x.begin() + static_cast<std::ptrdiff_t>(ch * n * hw + i * hw));
  }
  std::vector<double> h0(r * n * hw);
  for (double& v : h0) v = rng.uniform_open_low();

  NmfResult nmf = nmf_factorize(Tensor({c, n * hw}, std::move(x)), W_init, Tensor({r, n * hw}, std::move(h0)),
                                config_.nmf_iters);
  // Factorization outputs are constants w.r.t. the trainable weights.
  const Tensor M = ops::stop_gradient(ops::matmul(nmf.W, nmf.H));  // c x N*hw

  AimOutput out;
  out.features.reserve(n);
  auto m = M.data();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> mi(c * hw);
    for (std::size_t ch = 0; ch < c; ++ch)
      std::copy_n(m.begin() + static_cast<std::ptrdiff_t>(ch * n * hw + i * hw), hw, mi.begin() + static_cast<std::ptrdiff_t>(ch * hw));
    const Tensor Mi({c, h, w}, std::move(mi));
    out.features.push_back(ops::relu(ops::add(Z_list[i], residual_(Mi))));
  }
  out.W = ops::stop_gradient(nmf.W);
  out.H = std::move(nmf.H);
  out.reconstruction_errors = std::move(nmf.reconstruction_errors);
  return out;
}

void AimModule::collect(const std::string& prefix, NamedParams& out) const {
  reduce_.collect(prefix + "/f_reduce", out);
  residual_.collect(prefix + "/f_residual", out);
}

}  // namespace xview
