#include "tinder/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tinder/errors.hpp"
#include "tinder/kernels.hpp"

namespace tinder {

namespace {

double clamped_log(double p) { return std::log(std::max(p, kLogClamp)); }

void check_targets(std::size_t n, PenaltyTargets history) {
  for (std::size_t s = 0; s < history.size(); ++s)
    if (history[s].n() != n)
      throw ContractViolation("penalty target " + std::to_string(s) + " has N=" +
                              std::to_string(history[s].n()) + ", expected " + std::to_string(n));
}

}  // namespace

CoclusterJoint cocluster_joint(const SoftAssignment& a, const SoftAssignment& b) {
  if (a.n() != b.n())
    throw ContractViolation("cocluster_joint: assignments cover different numbers of points");
  if (a.n() == 0) throw ContractViolation("cocluster_joint: empty assignment");
  CoclusterJoint out{kernels::outer_sum(a.resp, b.resp), std::vector<double>(a.k(), 0.0),
                     std::vector<double>(b.k(), 0.0)};
  const double inv_n = 1.0 / static_cast<double>(a.n());
  for (double& v : out.joint.flat()) v *= inv_n;
  for (std::size_t h = 0; h < a.k(); ++h)
    for (std::size_t g = 0; g < b.k(); ++g) {
      out.row_marginal[h] += out.joint(h, g);
      out.col_marginal[g] += out.joint(h, g);
    }
  return out;
}

double mutual_information(const CoclusterJoint& j) {
  double total = 0.0;
  for (std::size_t h = 0; h < j.joint.rows(); ++h) {
    const double log_row = clamped_log(j.row_marginal[h]);
    for (std::size_t g = 0; g < j.joint.cols(); ++g) {
      const double p = j.joint(h, g);
      if (p == 0.0) continue;
      total += p * (clamped_log(p) - log_row - clamped_log(j.col_marginal[g]));
    }
  }
  return std::max(total, 0.0);
}

double entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities)
    if (p > 0.0) h -= p * clamped_log(p);
  return h;
}

double penalty_for_assignment(const SoftAssignment& current, PenaltyTargets history) {
  check_targets(current.n(), history);
  double total = 0.0;
  for (const auto& target : history) total += mutual_information(cocluster_joint(current, target));
  return total;
}

double accumulate_penalty_dz(const SoftAssignment& current, PenaltyTargets history, double scale,
                             Matrix& dz) {
  check_targets(current.n(), history);
  const std::size_t n = current.n();
  const std::size_t k = current.k();
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;

  for (const auto& target : history) {
    const auto joint = cocluster_joint(current, target);
    total += mutual_information(joint);
    const std::size_t kt = target.k();

    // dI/dP(h, g) for the clamped objective; the target marginal does not
    // depend on theta and drops out.
    Matrix dmi(k, kt);
    for (std::size_t h = 0; h < k; ++h) {
      const double pr = joint.row_marginal[h];
      const double row_term = clamped_log(pr) + (pr > kLogClamp ? 1.0 : 0.0);
      for (std::size_t g = 0; g < kt; ++g) {
        const double p = joint.joint(h, g);
        dmi(h, g) = clamped_log(p) + (p > kLogClamp ? 1.0 : 0.0) - row_term;
      }
    }

#pragma omp parallel
    {
      std::vector<double> grad_r(k);
#pragma omp for schedule(static)
      for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const auto ri = current.resp.row(i);
        const auto bi = target.resp.row(i);
        auto out = dz.row(i);
        // grad_r[h] = dI/dr(i,h), then pushed through the row softmax.
        double mean_g = 0.0;
        for (std::size_t h = 0; h < k; ++h) {
          double acc = 0.0;
          for (std::size_t g = 0; g < kt; ++g) acc += dmi(h, g) * bi[g];
          grad_r[h] = acc * inv_n;
          mean_g += ri[h] * grad_r[h];
        }
        for (std::size_t h = 0; h < k; ++h) out[h] += scale * ri[h] * (grad_r[h] - mean_g);
      }
    }
  }
  return total;
}

double penalty(const MixtureParams& theta, PenaltyTargets history, const DataMatrix& data) {
  if (history.empty()) {
    check_compatible(data, theta);
    return 0.0;
  }
  return penalty_for_assignment(responsibilities(data, theta), history);
}

ParamGradient penalty_gradient(const MixtureParams& theta, PenaltyTargets history,
                               const DataMatrix& data) {
  check_compatible(data, theta);
  if (history.empty()) return ParamGradient(theta.parameter_count(), 0.0);
  const auto current = responsibilities(data, theta);
  Matrix dz(data.n(), theta.k());
  accumulate_penalty_dz(current, history, 1.0, dz);
  return kernels::backprop(data.values, theta, ComponentTable(theta), dz);
}

}  // namespace tinder
