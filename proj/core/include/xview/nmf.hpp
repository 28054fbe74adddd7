#pragma once

#include <vector>

#include "xview/tensor.hpp"

namespace xview {

// Added to both multiplicative-update denominators.
inline constexpr double kNmfDenominatorGuard = 1e-12;

struct NmfResult {
  Tensor W;  // c x r
  Tensor H;  // r x M
  // ||X - WH||_F before the first iteration and after each iteration.
  std::vector<double> reconstruction_errors;
};

// Lee-Seung multiplicative updates for min ||X - WH||_F with W, H >= 0.
// Each iteration updates H, then W (unless `update_dictionary` is false).
// Works on plain values: the result never carries gradient history.
// Requires iters >= 1 and entrywise non-negative inputs.
NmfResult nmf_factorize(const Tensor& X, const Tensor& W_init, const Tensor& H_init, int iters,
                        bool update_dictionary = true);

// Same as nmf_factorize but accepts iters == 0 (returns the inputs).
NmfResult nmf_refine(const Tensor& X, const Tensor& W_init, const Tensor& H_init, int iters,
                     bool update_dictionary = true);

double frobenius_residual(const Tensor& X, const Tensor& W, const Tensor& H);

}  // namespace xview
