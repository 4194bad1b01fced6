#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tinder/mixture.hpp"

namespace tinder {

struct HardClustering {
  std::vector<int> labels;

  std::size_t n() const noexcept { return labels.size(); }
  // One more than the largest label (0 for an empty clustering).
  std::size_t cluster_count() const noexcept;

  bool operator==(const HardClustering&) const = default;
};

struct ContingencyTable {
  std::vector<std::int64_t> counts;  // rows x cols, row-major
  std::vector<std::int64_t> row_totals;
  std::vector<std::int64_t> col_totals;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::int64_t n = 0;

  std::int64_t operator()(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }
};

// Row-wise argmax, ties to the lowest index.
HardClustering harden(const SoftAssignment& s);

// Throws ContractViolation on length mismatch or a negative label.
ContingencyTable contingency(const HardClustering& a, const HardClustering& b);

// Adjusted Rand score, the Hubert-Arabie form. When the chance-corrected
// denominator vanishes, returns 1 if the partitions are identical and 0
// otherwise.
double adjusted_rand(const HardClustering& a, const HardClustering& b);

// I(A;B) / ((H(A) + H(B)) / 2) with natural logs. Two single-cluster
// partitions score 1.
double nmi(const HardClustering& a, const HardClustering& b);

// Fraction of points that fall in the majority ground-truth class of their
// cluster.
double purity(const HardClustering& pred, const HardClustering& truth);

}  // namespace tinder
