#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tinder/mixture.hpp"
#include "tinder/penalty.hpp"

namespace tinder {

// Either a fixed non-negative weight or "auto" (resolved per feedback
// iteration by the session layer).
struct BetaPolicy {
  bool is_auto = false;
  double value = 0.0;

  static BetaPolicy fixed(double beta);
  static BetaPolicy automatic() { return {true, 0.0}; }
  // "auto" or a non-negative number.
  static BetaPolicy parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const BetaPolicy&) const = default;
};

struct FitConfig {
  std::size_t k = 1;
  BetaPolicy beta = BetaPolicy::fixed(0.0);
  std::size_t restarts = 8;
  std::size_t max_steps = 500;
  double rel_tol = 1e-7;
  std::uint64_t seed = 0;
  CovarianceMode covariance_mode = CovarianceMode::diagonal;

  // Throws InvalidConfig.
  void validate() const;

  bool operator==(const FitConfig&) const = default;
};

struct FitResult {
  MixtureParams params;
  SoftAssignment assignment;
  double objective = 0.0;
  double log_likelihood = 0.0;
  double penalty_value = 0.0;
  double beta = 0.0;
  std::vector<double> trace;  // objective after every accepted step, starting at the initial point
  std::size_t restart_index = 0;
};

// log_likelihood - beta * penalty. The base prior is flat, so its log is 0.
double objective(const MixtureParams& theta, const DataMatrix& data, PenaltyTargets history,
                 double beta);

// Multi-restart penalized MAP fit with explicit beta.
FitResult fit(const DataMatrix& data, PenaltyTargets history, const FitConfig& config, double beta);

// Uses config.beta, which must be fixed unless history is empty.
FitResult fit(const DataMatrix& data, PenaltyTargets history, const FitConfig& config);

// `count` unpenalized fits, fit i seeded with derive_seed(config.seed, i).
std::vector<FitResult> baseline_restarts(const DataMatrix& data, const FitConfig& config,
                                         std::size_t count);

// Same, with the per-fit seeds given explicitly.
std::vector<FitResult> baseline_restarts(const DataMatrix& data, const FitConfig& config,
                                         std::span<const std::uint64_t> seeds);

// SplitMix64 mixing of (base, stream); used for every derived seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// k-means++ mean seeding, uniform weights, data variance per dimension.
MixtureParams initial_params(const DataMatrix& data, std::size_t k, CovarianceMode mode,
                             std::mt19937_64& rng);

}  // namespace tinder
