#include "tinder/compare.hpp"

#include <memory>

#include "tinder/data_io.hpp"
#include "tinder/errors.hpp"
#include "tinder/session.hpp"

namespace tinder {

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void append_rows(const std::string& method, const MethodSummary& m,
                 const std::optional<HardClustering>& truth, std::vector<ComparisonRow>& rows) {
  const auto& cs = m.clusterings;
  for (std::size_t t = 0; t < cs.size(); ++t) {
    ComparisonRow r;
    r.iteration = t;
    r.method = method;
    if (truth) r.purity = purity(cs[t], *truth);
    if (t > 0) {
      r.ars_consecutive = adjusted_rand(cs[t], cs[t - 1]);
      r.nmi_consecutive = nmi(cs[t], cs[t - 1]);
      double worst = -1.0;
      for (std::size_t s = 0; s < t; ++s) worst = std::max(worst, adjusted_rand(cs[t], cs[s]));
      r.ars_max_pairwise = worst;
    }
    rows.push_back(std::move(r));
  }
}

}  // namespace

MethodSummary summarize_method(std::vector<HardClustering> clusterings,
                               const std::optional<HardClustering>& truth) {
  MethodSummary m;
  m.clusterings = std::move(clusterings);
  const auto& cs = m.clusterings;
  if (truth && !cs.empty()) {
    double total = 0.0;
    for (const auto& c : cs) total += purity(c, *truth);
    m.mean_purity = total / static_cast<double>(cs.size());
  }
  double sum = 0.0, worst = -1.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < cs.size(); ++a)
    for (std::size_t b = a + 1; b < cs.size(); ++b) {
      const double v = adjusted_rand(cs[a], cs[b]);
      sum += v;
      worst = std::max(worst, v);
      ++pairs;
    }
  if (pairs > 0) {
    m.mean_pairwise_ars = sum / static_cast<double>(pairs);
    m.max_pairwise_ars = worst;
  }
  return m;
}

Comparison compare_methods(const DataMatrix& data, const FitConfig& config, std::size_t iterations) {
  if (iterations < 2) throw InvalidConfig("compare needs at least two iterations");
  std::optional<HardClustering> truth;
  if (data.labels) truth = HardClustering{*data.labels};

  Comparison out;
  SessionOptions opts;
  opts.session_id = "s-compare";
  auto state = start_session(std::make_shared<const DataMatrix>(data), config, opts);
  while (state.history.size() < iterations) state = reject(state);
  std::vector<HardClustering> tinder_hard;
  for (const auto& e : state.history.entries) {
    tinder_hard.push_back(harden(e.assignment));
    if (e.iteration > 0) out.betas.push_back(e.beta);
  }
  out.beta_first = out.betas.front();

  std::vector<HardClustering> baseline_hard;
  for (const auto& r : baseline_restarts(data, config, iterations)) baseline_hard.push_back(harden(r.assignment));

  out.tinder = summarize_method(std::move(tinder_hard), truth);
  out.baseline = summarize_method(std::move(baseline_hard), truth);
  append_rows("tinder", out.tinder, truth, out.rows);
  append_rows("baseline", out.baseline, truth, out.rows);
  return out;
}

std::string comparison_csv(const Comparison& c, const FitConfig& config) {
  std::string s = "# beta=" + config.beta.to_string() + " k=" + std::to_string(config.k) +
                  " seed=" + std::to_string(config.seed) +
                  " iterations=" + std::to_string(c.tinder.clusterings.size()) + "\n";
  s += "# resolved_betas=";
  for (std::size_t i = 0; i < c.betas.size(); ++i) s += (i ? ";" : "") + format_double(c.betas[i]);
  s += "\n";
  s += "iteration,method,purity,ars_consecutive,nmi_consecutive,ars_max_pairwise\n";
  for (const auto& r : c.rows)
    s += std::to_string(r.iteration) + "," + r.method + "," + cell(r.purity) + "," + cell(r.ars_consecutive) +
         "," + cell(r.nmi_consecutive) + "," + cell(r.ars_max_pairwise) + "\n";
  return s;
}

}  // namespace tinder
