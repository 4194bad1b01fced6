// Straightforward serial versions of the kernels. They read parameters
// through MixtureParams rather than the precomputed table, so they also
// cross-check ComponentTable.

#include <cmath>
#include <numbers>

#include "tinder/kernels.hpp"

namespace tinder::reference {

void log_joint(const Matrix& x, const MixtureParams& params, const ComponentTable&, Matrix& z) {
  const auto log_w = params.log_weights();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < params.k(); ++c) {
      double v = log_w[c];
      for (std::size_t j = 0; j < params.d(); ++j) {
        const double var = params.variance(c, j);
        const double diff = x(i, j) - params.means(c, j);
        v += -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * diff * diff / var;
      }
      z(i, c) = v;
    }
  }
}

void normalize_rows(Matrix& z, std::span<double> row_lse) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double top = z(i, 0);
    for (std::size_t c = 1; c < z.cols(); ++c) top = std::max(top, z(i, c));
    double acc = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) acc += std::exp(z(i, c) - top);
    row_lse[i] = top + std::log(acc);
    for (std::size_t c = 0; c < z.cols(); ++c) z(i, c) = std::exp(z(i, c) - row_lse[i]);
  }
}

double sum(std::span<const double> values) {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

ParamGradient backprop(const Matrix& x, const MixtureParams& params, const ComponentTable&,
                       const Matrix& dz) {
  const std::size_t k = params.k();
  const std::size_t d = params.d();
  const bool spherical = params.mode == CovarianceMode::spherical;
  const auto w = params.weights();
  ParamGradient grad(params.parameter_count(), 0.0);
  double* ga = grad.data();
  double* gmu = ga + k;
  double* glv = gmu + k * d;

  for (std::size_t i = 0; i < x.rows(); ++i) {
    double row_mass = 0.0;
    for (std::size_t c = 0; c < k; ++c) row_mass += dz(i, c);
    for (std::size_t c = 0; c < k; ++c) {
      const double u = dz(i, c);
      ga[c] += u - w[c] * row_mass;
      for (std::size_t j = 0; j < d; ++j) {
        const double var = params.variance(c, j);
        const double e = var - MixtureParams::kVarianceFloor;
        const double diff = x(i, j) - params.means(c, j);
        gmu[c * d + j] += u * diff / var;
        const double dlv = u * 0.5 * (diff * diff / var - 1.0) / var * e;
        if (spherical) {
          glv[c] += dlv;
        } else {
          glv[c * d + j] += dlv;
        }
      }
    }
  }
  return grad;
}

Matrix outer_sum(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t h = 0; h < a.cols(); ++h)
      for (std::size_t g = 0; g < b.cols(); ++g) out(h, g) += a(i, h) * b(i, g);
  return out;
}

}  // namespace tinder::reference
