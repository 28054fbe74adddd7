#pragma once

// Plain re-implementations used as references by the unit tests and the
// acceptance harness. Deliberately naive: nested vectors, no shared code with
// the library beyond Tensor access.

#include <cmath>
#include <vector>

#include "xview/tensor.hpp"

namespace xview::testing::oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const Tensor& t) {
  Matrix m(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m[i][j] = t.at(i * t.dim(1) + j);
  return m;
}

inline Matrix product(const Matrix& a, const Matrix& b) {
  Matrix out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Matrix transposed(const Matrix& a) {
  Matrix out(a[0].size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) out[j][i] = a[i][j];
  return out;
}

// Textbook Lee-Seung updates written with plain nested vectors.
inline void oracle_nmf(const Matrix& x, Matrix& w, Matrix& h, int iters) {
  const double guard = 1e-12;
  for (int it = 0; it < iters; ++it) {
    const Matrix wt = transposed(w);
    const Matrix num_h = product(wt, x);
    const Matrix den_h = product(product(wt, w), h);
    for (std::size_t i = 0; i < h.size(); ++i)
      for (std::size_t j = 0; j < h[0].size(); ++j) h[i][j] = h[i][j] * num_h[i][j] / (den_h[i][j] + guard);
    const Matrix ht = transposed(h);
    const Matrix num_w = product(x, ht);
    const Matrix den_w = product(w, product(h, ht));
    for (std::size_t i = 0; i < w.size(); ++i)
      for (std::size_t j = 0; j < w[0].size(); ++j) w[i][j] = w[i][j] * num_w[i][j] / (den_w[i][j] + guard);
  }
}

inline double oracle_error(const Matrix& x, const Matrix& w, const Matrix& h) {
  const Matrix wh = product(w, h);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x[0].size(); ++j) s += (x[i][j] - wh[i][j]) * (x[i][j] - wh[i][j]);
  return std::sqrt(s);
}

// Straightforward versions written from the formulas.
struct Oracle {
  static std::vector<double> unit(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data()) s += v;
    std::vector<double> out;
    for (double v : t.data()) out.push_back(v / s);
    return out;
  }
  static double kld(const Tensor& p, const Tensor& q) {
    const auto P = unit(p), Q = unit(q);
    double acc = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) acc += Q[i] * std::log(1e-12 + Q[i] / (1e-12 + P[i]));
    return acc;
  }
  static double sim(const Tensor& p, const Tensor& q) {
    const auto P = unit(p), Q = unit(q);
    double acc = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) acc += P[i] < Q[i] ? P[i] : Q[i];
    return acc;
  }
  static double nss(const Tensor& p, const Tensor& q) {
    const double n = static_cast<double>(p.numel());
    double mu = 0.0;
    for (double v : p.data()) mu += v / n;
    double var = 0.0;
    for (double v : p.data()) var += (v - mu) * (v - mu) / n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      num += (p.at(i) - mu) / std::sqrt(var) * q.at(i);
      den += q.at(i);
    }
    return num / den;
  }
};

}  // namespace xview::testing::oracle
