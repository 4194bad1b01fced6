#include "tinder/optimizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tinder/errors.hpp"
#include "tinder/kernels.hpp"

namespace tinder {

BetaPolicy BetaPolicy::fixed(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw ContractViolation("beta must be a finite non-negative number");
  return {false, beta};
}

BetaPolicy BetaPolicy::parse(std::string_view text) {
  if (text == "auto") return automatic();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v) || v < 0.0)
    throw InvalidConfig("beta must be 'auto' or a non-negative number, got '" + std::string(text) +
                        "'");
  return {false, v};
}

std::string BetaPolicy::to_string() const {
  if (is_auto) return "auto";
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

void FitConfig::validate() const {
  if (k < 1) throw InvalidConfig("k must be at least 1");
  if (!beta.is_auto && (!(beta.value >= 0.0) || !std::isfinite(beta.value)))
    throw InvalidConfig("beta must be non-negative");
  if (restarts < 1) throw InvalidConfig("restarts must be at least 1");
  if (max_steps < 1) throw InvalidConfig("max_steps must be at least 1");
  if (!(rel_tol > 0.0)) throw InvalidConfig("rel_tol must be positive");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

// Value of the penalized objective together with the intermediate
// quantities the gradient reuses.
struct Evaluation {
  double objective = -std::numeric_limits<double>::infinity();
  double log_likelihood = 0.0;
  double penalty = 0.0;
  SoftAssignment resp;
};

class PenalizedObjective {
 public:
  PenalizedObjective(const DataMatrix& data, PenaltyTargets history, double beta)
      : data_(data), history_(beta > 0.0 ? history : PenaltyTargets{}), beta_(beta) {}

  Evaluation evaluate(const MixtureParams& theta) const {
    const ComponentTable table(theta);
    Evaluation e;
    e.resp.resp = Matrix(data_.n(), theta.k());
    std::vector<double> lse(data_.n());
    kernels::log_joint(data_.values, theta, table, e.resp.resp);
    kernels::normalize_rows(e.resp.resp, lse);
    e.log_likelihood = kernels::sum(lse);
    e.penalty = history_.empty() ? 0.0 : penalty_for_assignment(e.resp, history_);
    e.objective = e.log_likelihood - beta_ * e.penalty;
    return e;
  }

  ParamGradient gradient(const MixtureParams& theta, const Evaluation& e) const {
    Matrix dz = e.resp.resp;
    if (!history_.empty()) accumulate_penalty_dz(e.resp, history_, -beta_, dz);
    return kernels::backprop(data_.values, theta, ComponentTable(theta), dz);
  }

 private:
  const DataMatrix& data_;
  PenaltyTargets history_;
  double beta_;
};

// Diagonal scaling that turns the raw gradient into roughly an EM-sized
// step: mean updates land near the responsibility-weighted mean at unit
// step, and weights / variances scale with the soft counts. All factors are
// positive, so the scaled direction is still an ascent direction.
std::vector<double> precondition(const MixtureParams& theta, const SoftAssignment& resp,
                                 const ParamGradient& grad) {
  const std::size_t k = theta.k();
  const std::size_t d = theta.d();
  const std::size_t n = resp.n();
  std::vector<double> counts(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) counts[c] += resp.resp(i, c);
  const auto w = theta.weights();

  std::vector<double> dir(grad.size());
  for (std::size_t c = 0; c < k; ++c)
    dir[c] = grad[c] / (static_cast<double>(n) * w[c] + 1.0);
  const std::size_t mu0 = k;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j)
      dir[mu0 + c * d + j] = grad[mu0 + c * d + j] * theta.variance(c, j) / (counts[c] + 1e-3);
  const std::size_t lv0 = k + k * d;
  const bool spherical = theta.mode == CovarianceMode::spherical;
  const std::size_t lv_cols = spherical ? 1 : d;
  for (std::size_t c = 0; c < k; ++c) {
    const double curvature = 0.5 * counts[c] * (spherical ? static_cast<double>(d) : 1.0) + 1e-3;
    for (std::size_t j = 0; j < lv_cols; ++j)
      dir[lv0 + c * lv_cols + j] = grad[lv0 + c * lv_cols + j] / curvature;
  }
  return dir;
}

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 50;

FitResult ascend(const PenalizedObjective& f, MixtureParams theta, const FitConfig& config,
                 double beta, std::size_t restart_index) {
  Evaluation current = f.evaluate(theta);
  if (!std::isfinite(current.objective))
    throw InvalidParams("objective is not finite at the initial point");
  std::vector<double> trace{current.objective};
  double step = 1.0;

  for (std::size_t it = 0; it < config.max_steps; ++it) {
    const auto grad = f.gradient(theta, current);
    const auto dir = precondition(theta, current.resp, grad);
    const double slope = std::inner_product(grad.begin(), grad.end(), dir.begin(), 0.0);
    if (!(slope > 0.0)) break;

    const auto base = theta.flatten();
    std::vector<double> trial_flat(base.size());
    MixtureParams trial = theta;
    Evaluation accepted;
    bool found = false;
    double alpha = std::min(1.0, 2.0 * step);
    for (int bt = 0; bt < kMaxBacktracks; ++bt, alpha *= 0.5) {
      for (std::size_t p = 0; p < base.size(); ++p) trial_flat[p] = base[p] + alpha * dir[p];
      if (!std::all_of(trial_flat.begin(), trial_flat.end(),
                       [](double v) { return std::isfinite(v); }))
        continue;
      trial.assign(trial_flat);
      Evaluation e = f.evaluate(trial);
      if (std::isfinite(e.objective) &&
          e.objective >= current.objective + kArmijo * alpha * slope) {
        accepted = std::move(e);
        found = true;
        break;
      }
    }
    if (!found) break;

    const double gain = accepted.objective - current.objective;
    step = alpha;
    theta = std::move(trial);
    current = std::move(accepted);
    trace.push_back(current.objective);
    if (gain <= config.rel_tol * std::max(1.0, std::abs(trace[trace.size() - 2]))) break;
  }

  FitResult r;
  r.params = std::move(theta);
  r.assignment = std::move(current.resp);
  r.objective = current.objective;
  r.log_likelihood = current.log_likelihood;
  r.penalty_value = current.penalty;
  r.beta = beta;
  r.trace = std::move(trace);
  r.restart_index = restart_index;
  return r;
}

}  // namespace

MixtureParams initial_params(const DataMatrix& data, std::size_t k, CovarianceMode mode,
                             std::mt19937_64& rng) {
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  if (k > n) throw InvalidConfig("k exceeds the number of data points");

  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  chosen.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const auto last = data.values.row(chosen.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = data.values.row(i);
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) dist += (xi[j] - last[j]) * (xi[j] - last[j]);
      nearest[i] = std::min(nearest[i], dist);
      total += nearest[i];
    }
    std::size_t pick;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> dist(nearest.begin(), nearest.end());
      pick = dist(rng);
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    chosen.push_back(pick);
  }

  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += data.values(i, j);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = data.values(i, j) - mean[j];
      var[j] += diff * diff;
    }
  for (double& v : var) v = std::max(v / static_cast<double>(n), MixtureParams::kVarianceFloor);

  MixtureParams p;
  p.mode = mode;
  p.weight_logits.assign(k, 0.0);
  p.means = Matrix(k, d);
  for (std::size_t c = 0; c < k; ++c)
    std::copy_n(data.values.row(chosen[c]).begin(), d, p.means.row(c).begin());
  if (mode == CovarianceMode::spherical) {
    const double avg = std::accumulate(var.begin(), var.end(), 0.0) / static_cast<double>(d);
    p.log_variances = Matrix(k, 1, std::log(avg));
  } else {
    p.log_variances = Matrix(k, d);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < d; ++j) p.log_variances(c, j) = std::log(var[j]);
  }
  return p;
}

double objective(const MixtureParams& theta, const DataMatrix& data, PenaltyTargets history,
                 double beta) {
  if (!(beta >= 0.0)) throw ContractViolation("beta must be non-negative");
  const double ll = log_likelihood(data, theta);
  if (beta == 0.0 || history.empty()) return ll;
  return ll - beta * penalty(theta, history, data);
}

FitResult fit(const DataMatrix& data, PenaltyTargets history, const FitConfig& config,
              double beta) {
  config.validate();
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ContractViolation("beta must be non-negative");
  data.validate();
  if (config.k > data.n()) throw InvalidConfig("k exceeds the number of data points");
  for (const auto& h : history)
    if (h.n() != data.n()) throw ContractViolation("history assignment does not match data size");

  const PenalizedObjective f(data, history, beta);
  std::vector<FitResult> results(config.restarts);
  std::vector<std::string> failures(config.restarts);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(config.restarts); ++r) {
    try {
      std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
      auto init = initial_params(data, config.k, config.covariance_mode, rng);
      results[static_cast<std::size_t>(r)] =
          ascend(f, std::move(init), config, beta, static_cast<std::size_t>(r));
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(r)] = e.what();
    }
  }

  std::size_t best = config.restarts;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    if (!failures[r].empty()) continue;
    if (best == config.restarts || results[r].objective > results[best].objective) best = r;
  }
  if (best == config.restarts) throw InvalidData("every restart failed: " + failures.front());

  FitResult out = std::move(results[best]);
  // With beta = 0 the penalty never enters the ascent; report it anyway.
  if (beta == 0.0 && !history.empty()) out.penalty_value = penalty_for_assignment(out.assignment, history);
  return out;
}

FitResult fit(const DataMatrix& data, PenaltyTargets history, const FitConfig& config) {
  if (config.beta.is_auto) {
    if (!history.empty())
      throw InvalidConfig("automatic beta must be resolved before fitting against a history");
    return fit(data, history, config, 0.0);
  }
  return fit(data, history, config, config.beta.value);
}

std::vector<FitResult> baseline_restarts(const DataMatrix& data, const FitConfig& config,
                                         std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw InvalidConfig("baseline needs at least two restarts");
  std::vector<FitResult> out;
  out.reserve(seeds.size());
  for (auto s : seeds) {
    FitConfig c = config;
    c.seed = s;
    out.push_back(fit(data, {}, c, 0.0));
  }
  return out;
}

std::vector<FitResult> baseline_restarts(const DataMatrix& data, const FitConfig& config,
                                         std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(config.seed, i);
  return baseline_restarts(data, config, seeds);
}

}  // namespace tinder
