#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tinder/matrix.hpp"

namespace tinder {

// N x D observations. Labels are ground truth, used for evaluation only.
struct DataMatrix {
  Matrix values;
  std::optional<std::vector<int>> labels;
  std::vector<std::int64_t> ids;

  std::size_t n() const noexcept { return values.rows(); }
  std::size_t d() const noexcept { return values.cols(); }

  // Throws InvalidData when N or D is zero, a value is non-finite, or
  // labels/ids have the wrong length.
  void validate() const;

  bool operator==(const DataMatrix&) const = default;
};

// Builds a DataMatrix with ids 0..N-1 and validates it.
DataMatrix make_data(Matrix values, std::optional<std::vector<int>> labels = std::nullopt);

enum class CovarianceMode { diagonal, spherical };

std::string_view to_string(CovarianceMode mode);
CovarianceMode covariance_mode_from_string(std::string_view name);

// Unconstrained mixture parameterization:
//   weights    = softmax(weight_logits)
//   variance   = exp(log_variance) + kVarianceFloor
// log_variances is K x D in diagonal mode and K x 1 in spherical mode.
struct MixtureParams {
  static constexpr double kVarianceFloor = 1e-6;

  std::vector<double> weight_logits;
  Matrix means;
  Matrix log_variances;
  CovarianceMode mode = CovarianceMode::diagonal;

  std::size_t k() const noexcept { return weight_logits.size(); }
  std::size_t d() const noexcept { return means.cols(); }

  std::vector<double> weights() const;
  std::vector<double> log_weights() const;

  // Effective variance of component `c` along dimension `dim`.
  double variance(std::size_t c, std::size_t dim) const;

  // Length of the flattened unconstrained vector:
  // [weight_logits (K) | means (K*D) | log_variances (K*D or K)].
  std::size_t parameter_count() const noexcept;
  std::vector<double> flatten() const;
  // Overwrites all parameters from a flattened vector of parameter_count().
  void assign(std::span<const double> flat);

  // Throws ContractViolation on inconsistent shapes and InvalidParams on
  // non-finite entries.
  void validate() const;

  bool operator==(const MixtureParams&) const = default;
};

// Row i is p(h | x_i, theta).
struct SoftAssignment {
  Matrix resp;

  std::size_t n() const noexcept { return resp.rows(); }
  std::size_t k() const noexcept { return resp.cols(); }

  bool operator==(const SoftAssignment&) const = default;
};

// Gradient in the flattened layout of MixtureParams::flatten().
using ParamGradient = std::vector<double>;

SoftAssignment responsibilities(const DataMatrix& data, const MixtureParams& params);

// Sum over rows of log sum_k w_k N(x_i; mu_k, Sigma_k).
double log_likelihood(const DataMatrix& data, const MixtureParams& params);

ParamGradient ll_gradient(const DataMatrix& data, const MixtureParams& params);

// Dimension check shared by every entry point that pairs data with params.
void check_compatible(const DataMatrix& data, const MixtureParams& params);

}  // namespace tinder
