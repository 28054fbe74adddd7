#include "xview/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xview/errors.hpp"

namespace xview::ops {

namespace {

using detail::Node;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

// Accumulate `g` into parent i scaled elementwise by `fn(j)`.
template <typename Fn>
void accumulate(const Node& self, std::size_t parent, Fn&& fn) {
  Node& p = *self.parents[parent];
  if (!p.requires_grad) return;
  auto& g = p.grad_buffer();
  for (std::size_t j = 0; j < g.size(); ++j) g[j] += fn(j);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    accumulate(self, 0, [&](std::size_t j) { return self.grad[j]; });
    accumulate(self, 1, [&](std::size_t j) { return self.grad[j]; });
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    accumulate(self, 0, [&](std::size_t j) { return self.grad[j]; });
    accumulate(self, 1, [&](std::size_t j) { return -self.grad[j]; });
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    const auto& x = self.parents[0]->data;
    const auto& y = self.parents[1]->data;
    accumulate(self, 0, [&](std::size_t j) { return self.grad[j] * y[j]; });
    accumulate(self, 1, [&](std::size_t j) { return self.grad[j] * x[j]; });
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  return detail::make_result(a.shape(), std::move(out), {a}, [factor](const Node& self) {
    accumulate(self, 0, [&](std::size_t j) { return self.grad[j] * factor; });
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return detail::make_result({1}, {s}, {a}, [](const Node& self) {
    const double g = self.grad[0];
    accumulate(self, 0, [&](std::size_t) { return g; });
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor average(std::span<const Tensor> items) {
  if (items.empty()) throw InputError("average of an empty list");
  std::vector<double> out(items[0].numel(), 0.0);
  for (const auto& t : items) {
    require_same_shape(items[0], t, "average");
    auto d = t.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  const double inv = 1.0 / static_cast<double>(items.size());
  for (double& v : out) v *= inv;
  std::vector<Tensor> inputs(items.begin(), items.end());
  return detail::make_result(items[0].shape(), std::move(out), std::move(inputs), [inv](const Node& self) {
    for (std::size_t p = 0; p < self.parents.size(); ++p)
      accumulate(self, p, [&](std::size_t j) { return self.grad[j] * inv; });
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  return detail::make_result(std::move(shape), std::move(out), {a}, [](const Node& self) {
    accumulate(self, 0, [&](std::size_t j) { return self.grad[j]; });
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose needs a matrix, got " + shape_string(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  auto x = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  return detail::make_result({n, m}, std::move(out), {a}, [m, n](const Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

namespace {

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return detail::make_result({m, n}, std::move(out), {a, b}, [m, k, n](const Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double* dc = self.grad.data();
    if (pa.requires_grad) {
      // dA = dC * B^T
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* bp = pb.data.data() + p * n;
          const double* dci = dc + i * n;
          for (std::size_t j = 0; j < n; ++j) acc += dci[j] * bp[j];
          ga[i * k + p] += acc;
        }
    }
    if (pb.requires_grad) {
      // dB = A^T * dC
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa.data[i * k + p];
          if (av == 0.0) continue;
          double* gbp = gb.data() + p * n;
          const double* dci = dc + i * n;
          for (std::size_t j = 0; j < n; ++j) gbp[j] += av * dci[j];
        }
    }
  });
}

Tensor outer(const Tensor& p, const Tensor& q) {
  return matmul(reshape(p, {p.numel(), 1}), reshape(q, {1, q.numel()}));
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return detail::make_result(a.shape(), std::move(out), {a}, [](const Node& self) {
    const auto& x = self.parents[0]->data;
    accumulate(self, 0, [&](std::size_t j) { return x[j] > 0.0 ? self.grad[j] : 0.0; });
  });
}

Tensor log(const Tensor& a, double guard) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(x[i] + guard > 0.0)) throw DomainError("log of a non-positive value");
    out[i] = std::log(x[i] + guard);
  }
  return detail::make_result(a.shape(), std::move(out), {a}, [guard](const Node& self) {
    const auto& x = self.parents[0]->data;
    accumulate(self, 0, [&](std::size_t j) { return self.grad[j] / (x[j] + guard); });
  });
}

Tensor softmax_rows(const Tensor& a, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("softmax temperature must be positive");
  if (a.rank() != 1 && a.rank() != 2) throw ShapeError("softmax_rows needs a vector or matrix");
  const std::size_t rows = a.rank() == 2 ? a.dim(0) : 1;
  const std::size_t cols = a.rank() == 2 ? a.dim(1) : a.dim(0);
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * cols;
    double* yr = out.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, xr[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (yr[c] = std::exp((xr[c] - mx) / temperature));
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= z;
  }
  return detail::make_result(a.shape(), std::move(out), {a}, [rows, cols, temperature](const Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * cols;
      const double* dy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += dy[c] * y[c];
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (dy[c] - dot) / temperature;
    }
  });
}

namespace {

struct ConvGeom {
  std::size_t cin, h, w, cout, k, stride, pad, oh, ow;
};

// Range of output columns ox whose input column ox*stride + kx - pad is valid.
inline void valid_range(std::size_t kx, const ConvGeom& g, std::size_t in_extent, std::size_t out_extent,
                        std::size_t& lo, std::size_t& hi) {
  // need ox*stride + kx >= pad and ox*stride + kx - pad <= in_extent - 1
  lo = kx >= g.pad ? 0 : (g.pad - kx + g.stride - 1) / g.stride;
  const std::size_t lim = in_extent - 1 + g.pad;
  hi = lim < kx ? 0 : std::min(out_extent, (lim - kx) / g.stride + 1);
  if (hi < lo) hi = lo;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t stride, std::size_t padding) {
  if (x.rank() != 3 || kernel.rank() != 4)
    throw ShapeError("conv2d expects c x h x w input and c_out x c_in x k x k kernel");
  if (kernel.dim(1) != x.dim(0)) throw ShapeError("conv2d: kernel input channels do not match input");
  if (kernel.dim(2) != kernel.dim(3) || kernel.dim(2) % 2 == 0) throw ShapeError("conv2d: kernel must be square and odd");
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), kernel.dim(0), kernel.dim(2), stride, padding, 0, 0};
  if (g.h + 2 * g.pad < g.k || g.w + 2 * g.pad < g.k) throw ShapeError("conv2d: non-positive output size");
  g.oh = (g.h + 2 * g.pad - g.k) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.k) / g.stride + 1;
  if (bias.defined() && bias.numel() != g.cout) throw ShapeError("conv2d: bias length must equal output channels");

  const double* in = x.data().data();
  const double* kw = kernel.data().data();
  std::vector<double> out(g.cout * g.oh * g.ow, 0.0);
  for (std::size_t co = 0; co < g.cout; ++co) {
    double* op = out.data() + co * g.oh * g.ow;
    if (bias.defined()) std::fill(op, op + g.oh * g.ow, bias.data()[co]);
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const double* ip = in + ci * g.h * g.w;
      for (std::size_t ky = 0; ky < g.k; ++ky) {
        std::size_t oy0, oy1;
        valid_range(ky, g, g.h, g.oh, oy0, oy1);
        for (std::size_t kx = 0; kx < g.k; ++kx) {
          const double wv = kw[((co * g.cin + ci) * g.k + ky) * g.k + kx];
          if (wv == 0.0) continue;
          std::size_t ox0, ox1;
          valid_range(kx, g, g.w, g.ow, ox0, ox1);
          for (std::size_t oy = oy0; oy < oy1; ++oy) {
            const double* irow = ip + (oy * g.stride + ky - g.pad) * g.w + kx - g.pad;
            double* orow = op + oy * g.ow;
            if (g.stride == 1) {
              for (std::size_t ox = ox0; ox < ox1; ++ox) orow[ox] += wv * irow[ox];
            } else {
              for (std::size_t ox = ox0; ox < ox1; ++ox) orow[ox] += wv * irow[ox * g.stride];
            }
          }
        }
      }
    }
  }

  std::vector<Tensor> inputs{x, kernel};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return detail::make_result({g.cout, g.oh, g.ow}, std::move(out), std::move(inputs), [g, has_bias](const Node& self) {
    Node& px = *self.parents[0];
    Node& pk = *self.parents[1];
    const double* dout = self.grad.data();
    double* dx = px.requires_grad ? px.grad_buffer().data() : nullptr;
    double* dk = pk.requires_grad ? pk.grad_buffer().data() : nullptr;
    for (std::size_t co = 0; co < g.cout; ++co) {
      const double* dop = dout + co * g.oh * g.ow;
      for (std::size_t ci = 0; ci < g.cin; ++ci) {
        const double* ip = px.data.data() + ci * g.h * g.w;
        double* dip = dx ? dx + ci * g.h * g.w : nullptr;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          std::size_t oy0, oy1;
          valid_range(ky, g, g.h, g.oh, oy0, oy1);
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const std::size_t widx = ((co * g.cin + ci) * g.k + ky) * g.k + kx;
            const double wv = pk.data[widx];
            std::size_t ox0, ox1;
            valid_range(kx, g, g.w, g.ow, ox0, ox1);
            double acc = 0.0;
            for (std::size_t oy = oy0; oy < oy1; ++oy) {
              const std::size_t ioff = (oy * g.stride + ky - g.pad) * g.w + kx - g.pad;
              const double* drow = dop + oy * g.ow;
              for (std::size_t ox = ox0; ox < ox1; ++ox) {
                const std::size_t ii = ioff + ox * g.stride;
                acc += drow[ox] * ip[ii];
                if (dip) dip[ii] += wv * drow[ox];
              }
            }
            if (dk) dk[widx] += acc;
          }
        }
      }
    }
    if (has_bias) {
      Node& pb = *self.parents[2];
      if (pb.requires_grad) {
        auto& gb = pb.grad_buffer();
        for (std::size_t co = 0; co < g.cout; ++co) {
          double s = 0.0;
          for (std::size_t i = 0; i < g.oh * g.ow; ++i) s += dout[co * g.oh * g.ow + i];
          gb[co] += s;
        }
      }
    }
  });
}

Tensor gap(const Tensor& a) {
  if (a.rank() != 3) throw ShapeError("gap expects c x h x w");
  const std::size_t c = a.dim(0), hw = a.dim(1) * a.dim(2);
  std::vector<double> out(c, 0.0);
  auto x = a.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += x[ch * hw + i];
    out[ch] = s / static_cast<double>(hw);
  }
  return detail::make_result({c}, std::move(out), {a}, [hw](const Node& self) {
    const double inv = 1.0 / static_cast<double>(hw);
    accumulate(self, 0, [&](std::size_t j) { return self.grad[j / hw] * inv; });
  });
}

Tensor channel_max(const Tensor& a) {
  if (a.rank() != 3) throw ShapeError("channel_max expects c x h x w");
  const std::size_t c = a.dim(0), hw = a.dim(1) * a.dim(2);
  auto x = a.data();
  std::vector<double> out(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(hw));
  auto arg = std::make_shared<std::vector<std::size_t>>(hw, 0);
  for (std::size_t ch = 1; ch < c; ++ch)
    for (std::size_t i = 0; i < hw; ++i)
      if (x[ch * hw + i] > out[i]) {
        out[i] = x[ch * hw + i];
        (*arg)[i] = ch;
      }
  return detail::make_result({a.dim(1), a.dim(2)}, std::move(out), {a}, [arg, hw](const Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < hw; ++i) g[(*arg)[i] * hw + i] += self.grad[i];
  });
}

Tensor l2_loss(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l2_loss");
  auto x = a.data(), y = b.data();
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - y[i]) * (x[i] - y[i]);
  const double norm = std::sqrt(ss);
  return detail::make_result({1}, {norm}, {a, b}, [norm](const Node& self) {
    if (norm == 0.0) return;
    const auto& x = self.parents[0]->data;
    const auto& y = self.parents[1]->data;
    const double s = self.grad[0] / norm;
    accumulate(self, 0, [&](std::size_t j) { return s * (x[j] - y[j]); });
    accumulate(self, 1, [&](std::size_t j) { return -s * (x[j] - y[j]); });
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1) throw ShapeError("cross_entropy expects a logit vector");
  const std::size_t n = logits.numel();
  if (label >= n) throw LabelError("label " + std::to_string(label) + " out of range [0, " + std::to_string(n) + ")");
  auto x = logits.data();
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  return detail::make_result({1}, {lse - x[label]}, {logits}, [label, lse](const Node& self) {
    const auto& x = self.parents[0]->data;
    const double g = self.grad[0];
    accumulate(self, 0, [&](std::size_t j) { return g * (std::exp(x[j] - lse) - (j == label ? 1.0 : 0.0)); });
  });
}

namespace {
thread_local StopGradientCapture* active_capture = nullptr;
}

StopGradientCapture::StopGradientCapture(Mode mode, std::vector<Tensor>* values)
    : mode_(mode), values_(values), previous_(active_capture) {
  if (mode_ == Mode::kRecord) values_->clear();
  active_capture = this;
}

StopGradientCapture::~StopGradientCapture() { active_capture = previous_; }

Tensor StopGradientCapture::intercept(const Tensor& value) {
  if (mode_ == Mode::kRecord) {
    values_->push_back(value);
    return value;
  }
  if (cursor_ >= values_->size()) throw InputError("stop-gradient replay: more calls than recorded");
  const Tensor& recorded = (*values_)[cursor_++];
  if (recorded.shape() != value.shape()) throw ShapeError("stop-gradient replay: shape differs from recording");
  return recorded;
}

Tensor stop_gradient(const Tensor& a) {
  Tensor out = a.detach();
  return active_capture ? active_capture->intercept(out) : out;
}

}  // namespace xview::ops
