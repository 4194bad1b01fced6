#include "tinder/json_io.hpp"

#include "tinder/errors.hpp"

namespace tinder {

using nlohmann::json;

void to_json(json& j, const Matrix& m) {
  j = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    j.push_back(std::vector<double>(row.begin(), row.end()));
  }
}

void from_json(const json& j, Matrix& m) {
  if (!j.is_array()) throw FormatError("matrix must be a JSON array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.front().size();
  m = Matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) throw FormatError("matrix rows must be equal length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
}

void to_json(json& j, const MixtureParams& p) {
  j = json{{"covariance_mode", std::string(to_string(p.mode))},
           {"weight_logits", p.weight_logits},
           {"means", p.means},
           {"log_variances", p.log_variances}};
}

void from_json(const json& j, MixtureParams& p) {
  p.mode = covariance_mode_from_string(j.at("covariance_mode").get<std::string>());
  p.weight_logits = j.at("weight_logits").get<std::vector<double>>();
  p.means = j.at("means").get<Matrix>();
  p.log_variances = j.at("log_variances").get<Matrix>();
  p.validate();
}

void to_json(json& j, const BetaPolicy& b) {
  if (b.is_auto)
    j = "auto";
  else
    j = b.value;
}

void from_json(const json& j, BetaPolicy& b) {
  if (j.is_string()) {
    b = BetaPolicy::parse(j.get<std::string>());
  } else if (j.is_number()) {
    const double v = j.get<double>();
    if (!(v >= 0.0)) throw InvalidConfig("beta must be non-negative");
    b = BetaPolicy{false, v};
  } else {
    throw InvalidConfig("beta must be a number or \"auto\"");
  }
}

void to_json(json& j, const FitConfig& c) {
  j = json{{"k", c.k},
           {"beta", c.beta},
           {"restarts", c.restarts},
           {"max_steps", c.max_steps},
           {"rel_tol", c.rel_tol},
           {"seed", c.seed},
           {"covariance_mode", std::string(to_string(c.covariance_mode))}};
}

void from_json(const json& j, FitConfig& c) {
  c = FitConfig{};
  c.k = j.at("k").get<std::size_t>();
  c.beta = j.at("beta").get<BetaPolicy>();
  c.restarts = j.value("restarts", c.restarts);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.rel_tol = j.value("rel_tol", c.rel_tol);
  c.seed = j.value("seed", c.seed);
  c.covariance_mode =
      covariance_mode_from_string(j.value("covariance_mode", std::string("diagonal")));
}

}  // namespace tinder
