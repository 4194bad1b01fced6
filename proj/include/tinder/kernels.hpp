#pragma once

// Per-row numeric kernels behind the mixture and penalty operations.
//
// Two implementations share one interface:
//   tinder::kernels    OpenMP-parallel, used by the library.
//   tinder::reference  plain serial loops, kept as a test oracle and as the
//                      baseline in bench/.
//
// The parallel reductions sum fixed-size row blocks and then combine the
// block partials in block order, so their results do not depend on the
// thread count. They may differ from the serial reference in the last few
// ulps.

#include <cstddef>
#include <span>

#include "tinder/matrix.hpp"
#include "tinder/mixture.hpp"

namespace tinder {

// Per-component quantities precomputed once per parameter vector.
struct ComponentTable {
  std::size_t k = 0;
  std::size_t d = 0;
  std::vector<double> log_weights;     // K
  std::vector<double> weights;         // K
  std::vector<double> inv_variance;    // K x D (expanded in spherical mode)
  std::vector<double> exp_log_var;     // K x D, exp(l) = variance - floor
  std::vector<double> log_normalizer;  // K, -0.5 * sum_d log(2 pi var_kd)
  bool spherical = false;

  explicit ComponentTable(const MixtureParams& params);
};

namespace kernels {

inline constexpr std::size_t kBlockRows = 256;

// z(i,k) = log w_k + log N(x_i; mu_k, Sigma_k). z must be N x K.
void log_joint(const Matrix& x, const MixtureParams& params, const ComponentTable& table, Matrix& z);

// Row-wise softmax in place. row_lse[i] receives the log-sum-exp of row i.
void normalize_rows(Matrix& z, std::span<double> row_lse);

// Fixed-order blocked sum.
double sum(std::span<const double> values);

// Gradient of F with respect to the flattened parameters, given
// dz(i,k) = dF/dz(i,k) where z is the log-joint above.
ParamGradient backprop(const Matrix& x, const MixtureParams& params, const ComponentTable& table,
                       const Matrix& dz);

// sum_j a_j (outer) b_j, K x K'.
Matrix outer_sum(const Matrix& a, const Matrix& b);

}  // namespace kernels

namespace reference {

void log_joint(const Matrix& x, const MixtureParams& params, const ComponentTable& table, Matrix& z);
void normalize_rows(Matrix& z, std::span<double> row_lse);
double sum(std::span<const double> values);
ParamGradient backprop(const Matrix& x, const MixtureParams& params, const ComponentTable& table,
                       const Matrix& dz);
Matrix outer_sum(const Matrix& a, const Matrix& b);

}  // namespace reference

}  // namespace tinder
