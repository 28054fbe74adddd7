#pragma once

// Finite-difference fixtures shared by the gradient unit tests and the
// acceptance harness. Each case builds its inputs from a seed and returns the
// per-tensor comparison.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "support/gradcheck.hpp"
#include "xview/head.hpp"
#include "xview/model.hpp"
#include "xview/ops.hpp"

namespace xview::testing {

struct GradientCase {
  std::string name;
  std::function<std::vector<GradCheckEntry>(std::uint64_t seed)> run;
};

inline Tensor random_leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), true);
}

// Keeps values away from the ReLU / max kinks so central differences see a
// smooth function.
inline Tensor away_from_zero(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = (rng.coin() ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return Tensor(std::move(shape), std::move(v), true);
}

inline std::vector<GradCheckEntry> concat(std::vector<GradCheckEntry> a, const std::vector<GradCheckEntry>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline std::vector<GradientCase> gradient_cases() {
  std::vector<GradientCase> cases;
  cases.push_back({"elementwise", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = random_leaf({3, 4}, rng), b = random_leaf({3, 4}, rng);
                     return check_gradients(
                         [&] { return ops::sum(ops::mul(ops::add(a, b), ops::sub(a, ops::scale(b, 0.3)))); },
                         {{"a", a}, {"b", b}});
                   }});
  cases.push_back({"matmul_transpose_reshape", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = random_leaf({3, 5}, rng), b = random_leaf({5, 2}, rng), w = random_leaf({2, 3}, rng);
                     return check_gradients(
                         [&] {
                           return ops::sum(
                               ops::mul(ops::reshape(ops::matmul(a, b), {2, 3}), ops::transpose(ops::transpose(w))));
                         },
                         {{"a", a}, {"b", b}, {"w", w}});
                   }});
  cases.push_back({"outer_mean_average", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor p = random_leaf({3}, rng), q = random_leaf({4}, rng), r = random_leaf({3, 4}, rng);
                     return check_gradients(
                         [&] {
                           const std::vector<Tensor> items{ops::outer(p, q), r};
                           return ops::mean(ops::mul(ops::average(items), r));
                         },
                         {{"p", p}, {"q", q}, {"r", r}});
                   }});
  cases.push_back({"relu_log", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = away_from_zero({10}, rng);
                     Tensor b = random_leaf({10}, rng, 0.2, 2.0);
                     return check_gradients([&] { return ops::sum(ops::mul(ops::relu(a), ops::log(b, 1e-12))); },
                                            {{"a", a}, {"b", b}});
                   }});
  cases.push_back({"softmax_rows", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = random_leaf({3, 5}, rng, -2.0, 2.0), w = random_leaf({3, 5}, rng);
                     Tensor v = random_leaf({4}, rng), u = random_leaf({4}, rng);
                     return check_gradients(
                         [&] {
                           return ops::add(ops::sum(ops::mul(ops::softmax_rows(a, 0.7), w)),
                                           ops::sum(ops::mul(ops::softmax_rows(v, 2.0), u)));
                         },
                         {{"a", a}, {"w", w}, {"v", v}});
                   }});
  cases.push_back({"conv2d", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor x = random_leaf({2, 6, 5}, rng), k = random_leaf({3, 2, 3, 3}, rng);
                     Tensor bias = random_leaf({3}, rng), k1 = random_leaf({2, 3, 1, 1}, rng);
                     std::vector<GradCheckEntry> out;
                     for (std::size_t stride : {1, 2}) {
                       auto f = [&] {
                         const Tensor y = ops::conv2d(x, k, bias, stride, 1);
                         const Tensor z = ops::conv2d(y, k1, Tensor(), 1, 0);
                         return ops::sum(ops::mul(z, z));
                       };
                       out = concat(std::move(out), check_gradients(f, {{"x", x}, {"kernel", k}, {"bias", bias}, {"k1", k1}}));
                     }
                     return out;
                   }});
  cases.push_back({"gap_channel_max", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = random_leaf({4, 3, 3}, rng), w = random_leaf({4}, rng), v = random_leaf({3, 3}, rng);
                     return check_gradients(
                         [&] {
                           return ops::add(ops::sum(ops::mul(ops::gap(a), w)),
                                           ops::sum(ops::mul(ops::channel_max(a), v)));
                         },
                         {{"a", a}, {"w", w}, {"v", v}});
                   }});
  cases.push_back({"l2_cross_entropy", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = random_leaf({3, 3}, rng), b = random_leaf({3, 3}, rng);
                     Tensor logits = random_leaf({5}, rng, -3.0, 3.0);
                     return check_gradients(
                         [&] { return ops::add(ops::l2_loss(a, b), ops::cross_entropy(logits, seed % 5)); },
                         {{"a", a}, {"b", b}, {"logits", logits}});
                   }});
  cases.push_back({"stop_gradient", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor a = random_leaf({4}, rng);
                     return check_gradients([&] { return ops::sum(ops::mul(a, ops::stop_gradient(a))); }, {{"a", a}});
                   }});
  cases.push_back({"acp_loss", [](std::uint64_t seed) {
                     Rng rng(seed);
                     Tensor s = random_leaf({4}, rng, -2.0, 2.0), g = random_leaf({4}, rng, -2.0, 2.0);
                     return check_gradients([&] { return acp_loss(s, g, 1.5); }, {{"s", s}, {"g", g}});
                   }});
  // Full objective on a tiny two-branch model: every trainable tensor.
  cases.push_back({"total_loss", [](std::uint64_t seed) {
                     ModelConfig cfg;
                     cfg.encoder = EncoderConfig{8, 3, {4, 6}};
                     cfg.aim = AimConfig{4, 3, 3};
                     cfg.cft = CftConfig{4, 2, true};
                     cfg.head = HeadConfig{5, 3};
                     Model model(cfg, {"a", "b", "c"}, seed);
                     Rng data_rng(seed + 1000);
                     // Zero biases put dead pixels exactly on a ReLU kink, where a
                     // central difference measures neither one-sided derivative.
                     for (auto& [name, p] : model.parameters()) {
                       if (name.ends_with("bias")) {
                         Tensor t = p;
                         for (double& v : t.mutable_data()) v = data_rng.uniform(-0.1, 0.1);
                       }
                     }
                     std::vector<Tensor> exo;
                     for (int i = 0; i < 2; ++i) exo.push_back(random_leaf({3, 8, 8}, data_rng).detach());
                     const Tensor ego = random_leaf({3, 8, 8}, data_rng).detach();
                     auto f = [&] {
                       Rng rng(seed + 7);
                       return model.forward_instance(ego, exo, seed % 3, LossWeights{}, 1.0, rng).losses.total;
                     };
                     return check_gradients(f, model.parameters());
                   }});
  return cases;
}

}  // namespace xview::testing
