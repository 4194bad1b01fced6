#include "tinder/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tinder/errors.hpp"

namespace tinder {

namespace {

double choose2(std::int64_t m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); }

// Same partition up to relabelling: every non-empty row and column of the
// table has exactly one non-zero cell.
bool same_partition(const ContingencyTable& t) {
  std::vector<int> row_cells(t.rows, 0), col_cells(t.cols, 0);
  for (std::size_t r = 0; r < t.rows; ++r)
    for (std::size_t c = 0; c < t.cols; ++c)
      if (t(r, c) > 0) {
        ++row_cells[r];
        ++col_cells[c];
      }
  const auto at_most_one = [](int v) { return v <= 1; };
  return std::all_of(row_cells.begin(), row_cells.end(), at_most_one) &&
         std::all_of(col_cells.begin(), col_cells.end(), at_most_one);
}

double entropy_of(std::span<const std::int64_t> totals, std::int64_t n) {
  double h = 0.0;
  for (auto m : totals)
    if (m > 0) {
      const double p = static_cast<double>(m) / static_cast<double>(n);
      h -= p * std::log(p);
    }
  return h;
}

}  // namespace

std::size_t HardClustering::cluster_count() const noexcept {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

HardClustering harden(const SoftAssignment& s) {
  HardClustering out;
  out.labels.resize(s.n());
  for (std::size_t i = 0; i < s.n(); ++i) {
    const auto row = s.resp.row(i);
    out.labels[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

ContingencyTable contingency(const HardClustering& a, const HardClustering& b) {
  if (a.n() != b.n()) throw ContractViolation("clusterings cover different numbers of points");
  const auto negative = [](int l) { return l < 0; };
  if (std::any_of(a.labels.begin(), a.labels.end(), negative) ||
      std::any_of(b.labels.begin(), b.labels.end(), negative))
    throw ContractViolation("cluster labels must be non-negative");
  ContingencyTable t;
  t.rows = a.cluster_count();
  t.cols = b.cluster_count();
  t.n = static_cast<std::int64_t>(a.n());
  t.counts.assign(t.rows * t.cols, 0);
  t.row_totals.assign(t.rows, 0);
  t.col_totals.assign(t.cols, 0);
  for (std::size_t i = 0; i < a.n(); ++i) {
    const auto r = static_cast<std::size_t>(a.labels[i]);
    const auto c = static_cast<std::size_t>(b.labels[i]);
    ++t.counts[r * t.cols + c];
    ++t.row_totals[r];
    ++t.col_totals[c];
  }
  return t;
}

double adjusted_rand(const HardClustering& a, const HardClustering& b) {
  const auto t = contingency(a, b);
  double index = 0.0;
  for (auto m : t.counts) index += choose2(m);
  double sum_rows = 0.0, sum_cols = 0.0;
  for (auto m : t.row_totals) sum_rows += choose2(m);
  for (auto m : t.col_totals) sum_cols += choose2(m);
  const double pairs = choose2(t.n);
  const double expected = pairs > 0.0 ? sum_rows * sum_cols / pairs : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) return same_partition(t) ? 1.0 : 0.0;
  return (index - expected) / denom;
}

double nmi(const HardClustering& a, const HardClustering& b) {
  const auto t = contingency(a, b);
  if (t.n == 0) return 1.0;
  const double ha = entropy_of(t.row_totals, t.n);
  const double hb = entropy_of(t.col_totals, t.n);
  if (ha + hb == 0.0) return 1.0;
  const double n = static_cast<double>(t.n);
  double mi = 0.0;
  for (std::size_t r = 0; r < t.rows; ++r)
    for (std::size_t c = 0; c < t.cols; ++c) {
      const auto m = t(r, c);
      if (m == 0) continue;
      const double p = static_cast<double>(m) / n;
      mi += p * std::log(p * n * n / (static_cast<double>(t.row_totals[r]) *
                                      static_cast<double>(t.col_totals[c])));
    }
  return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

double purity(const HardClustering& pred, const HardClustering& truth) {
  const auto t = contingency(pred, truth);
  if (t.n == 0) throw ContractViolation("purity of an empty clustering");
  std::int64_t majority = 0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    std::int64_t best = 0;
    for (std::size_t c = 0; c < t.cols; ++c) best = std::max(best, t(r, c));
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(t.n);
}

}  // namespace tinder
