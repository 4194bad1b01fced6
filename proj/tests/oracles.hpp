#pragma once

// Independent oracles for the tests. Nothing here calls the library's
// kernels except through the function being differenced.

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "tinder/metrics.hpp"
#include "tinder/mixture.hpp"

namespace oracle {

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Central differences of f over the flattened parameters.
inline std::vector<double> finite_difference(const tinder::MixtureParams& at,
                                             const std::function<double(const tinder::MixtureParams&)>& f,
                                             double step = 1e-5) {
  const auto base = at.flatten();
  std::vector<double> grad(base.size());
  tinder::MixtureParams p = at;
  auto probe = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    probe[i] = base[i] + step;
    p.assign(probe);
    const double up = f(p);
    probe[i] = base[i] - step;
    p.assign(probe);
    const double down = f(p);
    probe[i] = base[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

// ||a - b|| / max(||b||, floor)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-6) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    norm += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), floor);
}

// Adjusted Rand by enumerating every point pair:
//   agreements = pairs together in both,
//   expectation = (pairs together in a) * (pairs together in b) / all pairs.
inline double pairwise_ars(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  double both = 0, in_a = 0, in_b = 0, all = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      both += (sa && sb);
      in_a += sa;
      in_b += sb;
      all += 1;
    }
  const double expected = all > 0 ? in_a * in_b / all : 0.0;
  const double max_index = 0.5 * (in_a + in_b);
  if (max_index == expected) return a == b ? 1.0 : -2.0;  // caller filters degenerate cases
  return (both - expected) / (max_index - expected);
}

// Mutual information from a joint table by the four-term (or K x K') sum.
inline double table_mi(const std::vector<std::vector<double>>& joint) {
  std::vector<double> row(joint.size(), 0.0), col(joint.front().size(), 0.0);
  for (std::size_t h = 0; h < joint.size(); ++h)
    for (std::size_t g = 0; g < joint[h].size(); ++g) {
      row[h] += joint[h][g];
      col[g] += joint[h][g];
    }
  double mi = 0.0;
  for (std::size_t h = 0; h < joint.size(); ++h)
    for (std::size_t g = 0; g < joint[h].size(); ++g)
      if (joint[h][g] > 0) mi += joint[h][g] * std::log(joint[h][g] / (row[h] * col[g]));
  return mi;
}

inline tinder::MixtureParams random_params(std::mt19937_64& rng, std::size_t k, std::size_t d,
                                           tinder::CovarianceMode mode = tinder::CovarianceMode::diagonal) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> lv(-0.7, 0.7);
  tinder::MixtureParams p;
  p.mode = mode;
  p.weight_logits.resize(k);
  for (auto& a : p.weight_logits) a = 0.5 * z(rng);
  p.means = tinder::Matrix(k, d);
  for (auto& m : p.means.flat()) m = 1.5 * z(rng);
  p.log_variances = tinder::Matrix(k, mode == tinder::CovarianceMode::spherical ? 1 : d);
  for (auto& l : p.log_variances.flat()) l = lv(rng);
  return p;
}

inline tinder::DataMatrix random_data(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> z(0.0, 1.5);
  tinder::Matrix m(n, d);
  for (auto& v : m.flat()) v = z(rng);
  return tinder::make_data(std::move(m));
}

// Random row-stochastic N x K matrix with entries bounded away from 0.
inline tinder::SoftAssignment random_assignment(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::gamma_distribution<double> g(0.7, 1.0);
  tinder::SoftAssignment s{tinder::Matrix(n, k)};
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0;
    for (std::size_t c = 0; c < k; ++c) total += (s.resp(i, c) = g(rng) + 1e-3);
    for (std::size_t c = 0; c < k; ++c) s.resp(i, c) /= total;
  }
  return s;
}

inline tinder::SoftAssignment one_hot(const std::vector<int>& labels, std::size_t k) {
  tinder::SoftAssignment s{tinder::Matrix(labels.size(), k)};
  for (std::size_t i = 0; i < labels.size(); ++i) s.resp(i, static_cast<std::size_t>(labels[i])) = 1.0;
  return s;
}

// Every labelling of n points with labels in [0, k).
inline std::vector<std::vector<int>> all_labelings(std::size_t n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  while (true) {
    out.push_back(cur);
    std::size_t i = 0;
    while (i < n && ++cur[i] == k) cur[i++] = 0;
    if (i == n) break;
  }
  return out;
}

// Every set partition of n points into at most max_blocks blocks, as
// restricted growth strings (first occurrence of label b precedes b + 1).
inline std::vector<std::vector<int>> all_partitions(std::size_t n, int max_blocks) {
  std::vector<std::vector<int>> out;
  for (auto& l : all_labelings(n, max_blocks)) {
    int next = 0;
    bool canonical = true;
    for (int v : l) {
      if (v > next) {
        canonical = false;
        break;
      }
      if (v == next) ++next;
    }
    if (canonical) out.push_back(l);
  }
  return out;
}

}  // namespace oracle
