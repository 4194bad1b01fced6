#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tinder/metrics.hpp"
#include "tinder/optimizer.hpp"

namespace tinder {

// One row of the comparison report. Consecutive and max-pairwise columns
// compare clustering t with t-1 and with every earlier clustering, so they
// are empty at t = 0.
struct ComparisonRow {
  std::size_t iteration = 0;
  std::string method;  // "tinder" or "baseline"
  std::optional<double> purity;
  std::optional<double> ars_consecutive;
  std::optional<double> nmi_consecutive;
  std::optional<double> ars_max_pairwise;
};

struct MethodSummary {
  std::vector<HardClustering> clusterings;
  std::optional<double> mean_purity;
  double max_pairwise_ars = 0.0;
  double mean_pairwise_ars = 0.0;
};

struct Comparison {
  double beta_first = 0.0;  // beta used by the first reject (auto resolves per iteration)
  std::vector<double> betas;
  MethodSummary tinder;
  MethodSummary baseline;
  std::vector<ComparisonRow> rows;
};

// `iterations` clusterings from each method: the session's iteration 0 plus
// iterations - 1 rejects, and as many seed-matched unpenalized restarts.
Comparison compare_methods(const DataMatrix& data, const FitConfig& config, std::size_t iterations);

// Report CSV: comment lines, then
// iteration,method,purity,ars_consecutive,nmi_consecutive,ars_max_pairwise
std::string comparison_csv(const Comparison& c, const FitConfig& config);

// Summary statistics of an ordered list of clusterings.
MethodSummary summarize_method(std::vector<HardClustering> clusterings, const std::optional<HardClustering>& truth);

}  // namespace tinder
