#include "tinder/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tinder/errors.hpp"
#include "tinder/kernels.hpp"

namespace tinder {

void DataMatrix::validate() const {
  if (n() == 0 || d() == 0) throw InvalidData("data matrix must have at least one row and column");
  for (double v : values.flat())
    if (!std::isfinite(v)) throw InvalidData("data matrix contains a non-finite value");
  if (labels && labels->size() != n())
    throw InvalidData("label vector length " + std::to_string(labels->size()) +
                      " does not match row count " + std::to_string(n()));
  if (labels && std::any_of(labels->begin(), labels->end(), [](int l) { return l < 0; }))
    throw InvalidData("labels must be non-negative");
  if (ids.size() != n()) throw InvalidData("row id vector length does not match row count");
}

DataMatrix make_data(Matrix values, std::optional<std::vector<int>> labels) {
  DataMatrix data{std::move(values), std::move(labels), {}};
  data.ids.resize(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) data.ids[i] = static_cast<std::int64_t>(i);
  data.validate();
  return data;
}

std::string_view to_string(CovarianceMode mode) {
  return mode == CovarianceMode::spherical ? "spherical" : "diagonal";
}

CovarianceMode covariance_mode_from_string(std::string_view name) {
  if (name == "diagonal") return CovarianceMode::diagonal;
  if (name == "spherical") return CovarianceMode::spherical;
  throw InvalidConfig("unknown covariance mode '" + std::string(name) + "'");
}

std::vector<double> MixtureParams::log_weights() const {
  const double top = *std::max_element(weight_logits.begin(), weight_logits.end());
  double acc = 0.0;
  for (double a : weight_logits) acc += std::exp(a - top);
  const double lse = top + std::log(acc);
  std::vector<double> out(weight_logits.size());
  std::transform(weight_logits.begin(), weight_logits.end(), out.begin(),
                 [lse](double a) { return a - lse; });
  return out;
}

std::vector<double> MixtureParams::weights() const {
  auto w = log_weights();
  for (double& v : w) v = std::exp(v);
  return w;
}

double MixtureParams::variance(std::size_t c, std::size_t dim) const {
  const double l = mode == CovarianceMode::spherical ? log_variances(c, 0) : log_variances(c, dim);
  return std::exp(l) + kVarianceFloor;
}

std::size_t MixtureParams::parameter_count() const noexcept {
  return k() + means.rows() * means.cols() + log_variances.rows() * log_variances.cols();
}

std::vector<double> MixtureParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), weight_logits.begin(), weight_logits.end());
  flat.insert(flat.end(), means.flat().begin(), means.flat().end());
  flat.insert(flat.end(), log_variances.flat().begin(), log_variances.flat().end());
  return flat;
}

void MixtureParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw ContractViolation("flattened parameter vector has wrong length");
  auto it = flat.begin();
  std::copy_n(it, k(), weight_logits.begin());
  it += static_cast<std::ptrdiff_t>(k());
  std::copy_n(it, means.flat().size(), means.flat().begin());
  it += static_cast<std::ptrdiff_t>(means.flat().size());
  std::copy_n(it, log_variances.flat().size(), log_variances.flat().begin());
}

void MixtureParams::validate() const {
  if (k() == 0) throw ContractViolation("mixture needs at least one component");
  if (means.rows() != k()) throw ContractViolation("means must have K rows");
  if (d() == 0) throw ContractViolation("means must have at least one column");
  const std::size_t lv_cols = mode == CovarianceMode::spherical ? 1 : d();
  if (log_variances.rows() != k() || log_variances.cols() != lv_cols)
    throw ContractViolation("log_variances shape does not match covariance mode");
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(weight_logits.begin(), weight_logits.end(), finite) ||
      !std::all_of(means.flat().begin(), means.flat().end(), finite) ||
      !std::all_of(log_variances.flat().begin(), log_variances.flat().end(), finite))
    throw InvalidParams("mixture parameters contain a non-finite value");
}

void check_compatible(const DataMatrix& data, const MixtureParams& params) {
  params.validate();
  if (data.d() != params.d())
    throw ContractViolation("data has D=" + std::to_string(data.d()) + " but parameters have D=" +
                            std::to_string(params.d()));
}

SoftAssignment responsibilities(const DataMatrix& data, const MixtureParams& params) {
  check_compatible(data, params);
  const ComponentTable table(params);
  SoftAssignment out{Matrix(data.n(), params.k())};
  std::vector<double> lse(data.n());
  kernels::log_joint(data.values, params, table, out.resp);
  kernels::normalize_rows(out.resp, lse);
  return out;
}

double log_likelihood(const DataMatrix& data, const MixtureParams& params) {
  check_compatible(data, params);
  const ComponentTable table(params);
  Matrix z(data.n(), params.k());
  std::vector<double> lse(data.n());
  kernels::log_joint(data.values, params, table, z);
  kernels::normalize_rows(z, lse);
  return kernels::sum(lse);
}

ParamGradient ll_gradient(const DataMatrix& data, const MixtureParams& params) {
  check_compatible(data, params);
  const ComponentTable table(params);
  Matrix z(data.n(), params.k());
  std::vector<double> lse(data.n());
  kernels::log_joint(data.values, params, table, z);
  kernels::normalize_rows(z, lse);
  // d/dz of log-sum-exp is the responsibility itself.
  return kernels::backprop(data.values, params, table, z);
}

}  // namespace tinder
