#pragma once

#include <span>
#include <vector>

#include "tinder/matrix.hpp"
#include "tinder/mixture.hpp"

namespace tinder {

// Joint distribution of two clusterings' labels when a data point is drawn
// uniformly and labelled independently by each clustering.
struct CoclusterJoint {
  Matrix joint;                      // K x K'
  std::vector<double> row_marginal;  // K
  std::vector<double> col_marginal;  // K'
};

// Arguments of log() are clamped here; the multiplier is left exact so that
// a zero cell contributes exactly zero.
inline constexpr double kLogClamp = 1e-12;

CoclusterJoint cocluster_joint(const SoftAssignment& a, const SoftAssignment& b);

// I(H; H') in nats.
double mutual_information(const CoclusterJoint& joint);

// Shannon entropy in nats of a probability vector.
double entropy(std::span<const double> probabilities);

// Frozen soft assignments of earlier feedback iterations. They are
// constants: gradients only flow through the current responsibilities.
using PenaltyTargets = std::span<const SoftAssignment>;

// Sum over targets of I(current; target).
double penalty(const MixtureParams& theta, PenaltyTargets history, const DataMatrix& data);

ParamGradient penalty_gradient(const MixtureParams& theta, PenaltyTargets history,
                               const DataMatrix& data);

// Building blocks shared with the optimizer, which already holds the
// current responsibilities.

// Penalty value for an already computed assignment.
double penalty_for_assignment(const SoftAssignment& current, PenaltyTargets history);

// Adds scale * dPenalty/dz to dz, where z is the log-joint whose row-wise
// softmax produced `current`. Returns the penalty value.
double accumulate_penalty_dz(const SoftAssignment& current, PenaltyTargets history, double scale,
                             Matrix& dz);

}  // namespace tinder
