#include "xview/nmf.hpp"

#include <cmath>

#include "xview/errors.hpp"

namespace xview {

namespace {

// Row-major dense matrix scratch used by the update loops.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

Mat from_tensor(const Tensor& t) {
  Mat m(t.dim(0), t.dim(1));
  std::copy(t.data().begin(), t.data().end(), m.v.begin());
  return m;
}

// out = A^T B   (A: k x m, B: k x n) -> m x n
void mul_tn(const Mat& a, const Mat& b, Mat& out) {
  std::fill(out.v.begin(), out.v.end(), 0.0);
  for (std::size_t p = 0; p < a.rows; ++p)
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double av = a(p, i);
      if (av == 0.0) continue;
      const double* bp = &b.v[p * b.cols];
      double* oi = &out.v[i * out.cols];
      for (std::size_t j = 0; j < b.cols; ++j) oi[j] += av * bp[j];
    }
}

// out = A B^T   (A: m x k, B: n x k) -> m x n
void mul_nt(const Mat& a, const Mat& b, Mat& out) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = 0.0;
      const double* ai = &a.v[i * a.cols];
      const double* bj = &b.v[j * b.cols];
      for (std::size_t p = 0; p < a.cols; ++p) s += ai[p] * bj[p];
      out(i, j) = s;
    }
}

// out = A B   (A: m x k, B: k x n)
void mul_nn(const Mat& a, const Mat& b, Mat& out) {
  std::fill(out.v.begin(), out.v.end(), 0.0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* bp = &b.v[p * b.cols];
      double* oi = &out.v[i * out.cols];
      for (std::size_t j = 0; j < b.cols; ++j) oi[j] += av * bp[j];
    }
}

double residual(const Mat& x, const Mat& w, const Mat& h) {
  Mat wh(x.rows, x.cols);
  mul_nn(w, h, wh);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const double d = x.v[i] - wh.v[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

void require_nonneg(const Tensor& t, const char* name) {
  for (double v : t.data())
    if (!(v >= 0.0)) throw DomainError(std::string("NMF input ") + name + " has a negative or NaN entry");
}

}  // namespace

double frobenius_residual(const Tensor& X, const Tensor& W, const Tensor& H) {
  return residual(from_tensor(X), from_tensor(W), from_tensor(H));
}

NmfResult nmf_refine(const Tensor& X, const Tensor& W_init, const Tensor& H_init, int iters, bool update_dictionary) {
  if (X.rank() != 2 || W_init.rank() != 2 || H_init.rank() != 2 || W_init.dim(0) != X.dim(0) ||
      H_init.dim(1) != X.dim(1) || W_init.dim(1) != H_init.dim(0))
    throw ShapeError("nmf: expected X c x M, W c x r, H r x M; got " + shape_string(X.shape()) + ", " +
                     shape_string(W_init.shape()) + ", " + shape_string(H_init.shape()));
  if (iters < 0) throw ConfigError("nmf: iteration count must be non-negative");
  require_nonneg(X, "X");
  require_nonneg(W_init, "W");
  require_nonneg(H_init, "H");

  const Mat x = from_tensor(X);
  Mat w = from_tensor(W_init);
  Mat h = from_tensor(H_init);
  const std::size_t r = w.cols;

  Mat wtx(r, x.cols), wtw(r, r), wtwh(r, x.cols);
  Mat xht(x.rows, r), hht(r, r), whht(x.rows, r);

  NmfResult result;
  result.reconstruction_errors.reserve(static_cast<std::size_t>(iters) + 1);
  result.reconstruction_errors.push_back(residual(x, w, h));
  for (int it = 0; it < iters; ++it) {
    // H <- H * (W^T X) / (W^T W H)
    mul_tn(w, x, wtx);
    mul_tn(w, w, wtw);
    mul_nn(wtw, h, wtwh);
    for (std::size_t i = 0; i < h.v.size(); ++i) h.v[i] *= wtx.v[i] / (wtwh.v[i] + kNmfDenominatorGuard);

    if (update_dictionary) {
      // W <- W * (X H^T) / (W H H^T)
      mul_nt(x, h, xht);
      mul_nt(h, h, hht);
      mul_nn(w, hht, whht);
      for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] *= xht.v[i] / (whht.v[i] + kNmfDenominatorGuard);
    }
    result.reconstruction_errors.push_back(residual(x, w, h));
  }
  result.W = Tensor({w.rows, w.cols}, std::move(w.v));
  result.H = Tensor({h.rows, h.cols}, std::move(h.v));
  return result;
}

NmfResult nmf_factorize(const Tensor& X, const Tensor& W_init, const Tensor& H_init, int iters,
                        bool update_dictionary) {
  if (iters < 1) throw ConfigError("nmf_factorize: iters must be >= 1");
  return nmf_refine(X, W_init, H_init, iters, update_dictionary);
}

}  // namespace xview
