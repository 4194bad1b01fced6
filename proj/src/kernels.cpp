#include "tinder/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tinder {

ComponentTable::ComponentTable(const MixtureParams& params)
    : k(params.k()),
      d(params.d()),
      log_weights(params.log_weights()),
      weights(params.weights()),
      inv_variance(k * d),
      exp_log_var(k * d),
      log_normalizer(k),
      spherical(params.mode == CovarianceMode::spherical) {
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t c = 0; c < k; ++c) {
    double log_det = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double l = spherical ? params.log_variances(c, 0) : params.log_variances(c, j);
      const double e = std::exp(l);
      const double var = e + MixtureParams::kVarianceFloor;
      exp_log_var[c * d + j] = e;
      inv_variance[c * d + j] = 1.0 / var;
      log_det += std::log(var);
    }
    log_normalizer[c] = -0.5 * (static_cast<double>(d) * log_two_pi + log_det);
  }
}

namespace kernels {

namespace {

std::size_t block_count(std::size_t n) { return (n + kBlockRows - 1) / kBlockRows; }

}  // namespace

void log_joint(const Matrix& x, const MixtureParams& params, const ComponentTable& t, Matrix& z) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  const std::size_t d = t.d;
  const std::size_t k = t.k;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto xi = x.row(static_cast<std::size_t>(i));
    auto zi = z.row(static_cast<std::size_t>(i));
    for (std::size_t c = 0; c < k; ++c) {
      const auto mu = params.means.row(c);
      const double* inv = t.inv_variance.data() + c * d;
      double quad = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = xi[j] - mu[j];
        quad += diff * diff * inv[j];
      }
      zi[c] = t.log_weights[c] + t.log_normalizer[c] - 0.5 * quad;
    }
  }
}

void normalize_rows(Matrix& z, std::span<double> row_lse) {
  const auto n = static_cast<std::ptrdiff_t>(z.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto zi = z.row(static_cast<std::size_t>(i));
    const double top = *std::max_element(zi.begin(), zi.end());
    double acc = 0.0;
    for (double v : zi) acc += std::exp(v - top);
    const double lse = top + std::log(acc);
    for (double& v : zi) v = std::exp(v - lse);
    row_lse[static_cast<std::size_t>(i)] = lse;
  }
}

double sum(std::span<const double> values) {
  const std::size_t blocks = block_count(values.size());
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlockRows;
    const std::size_t hi = std::min(values.size(), lo + kBlockRows);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += values[i];
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

ParamGradient backprop(const Matrix& x, const MixtureParams& params, const ComponentTable& t,
                       const Matrix& dz) {
  const std::size_t n = x.rows();
  const std::size_t d = t.d;
  const std::size_t k = t.k;
  const std::size_t blocks = block_count(n);

  // Per block: [column sums of dz (K) | mean grads (K*D) | log-var grads (K*D)]
  const std::size_t width = k + 2 * k * d;
  std::vector<double> partial(blocks * width, 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    double* acc = partial.data() + static_cast<std::size_t>(b) * width;
    double* col = acc;
    double* gmu = acc + k;
    double* glv = acc + k + k * d;
    const std::size_t lo = static_cast<std::size_t>(b) * kBlockRows;
    const std::size_t hi = std::min(n, lo + kBlockRows);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto xi = x.row(i);
      const auto ui = dz.row(i);
      for (std::size_t c = 0; c < k; ++c) {
        const double u = ui[c];
        col[c] += u;
        if (u == 0.0) continue;
        const auto mu = params.means.row(c);
        const double* inv = t.inv_variance.data() + c * d;
        const double* ev = t.exp_log_var.data() + c * d;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = xi[j] - mu[j];
          const double scaled = diff * inv[j];
          gmu[c * d + j] += u * scaled;
          glv[c * d + j] += u * 0.5 * (diff * scaled - 1.0) * inv[j] * ev[j];
        }
      }
    }
  }

  std::vector<double> total(width, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const double* acc = partial.data() + b * width;
    for (std::size_t w = 0; w < width; ++w) total[w] += acc[w];
  }

  ParamGradient grad(params.parameter_count(), 0.0);
  double mass = 0.0;
  for (std::size_t c = 0; c < k; ++c) mass += total[c];
  for (std::size_t c = 0; c < k; ++c) grad[c] = total[c] - t.weights[c] * mass;
  std::copy_n(total.begin() + static_cast<std::ptrdiff_t>(k), k * d,
              grad.begin() + static_cast<std::ptrdiff_t>(k));
  const double* glv = total.data() + k + k * d;
  double* out = grad.data() + k + k * d;
  if (t.spherical) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += glv[c * d + j];
      out[c] = s;
    }
  } else {
    std::copy_n(glv, k * d, out);
  }
  return grad;
}

Matrix outer_sum(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows();
  const std::size_t ka = a.cols();
  const std::size_t kb = b.cols();
  const std::size_t blocks = block_count(n);
  std::vector<double> partial(blocks * ka * kb, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(blocks); ++blk) {
    double* acc = partial.data() + static_cast<std::size_t>(blk) * ka * kb;
    const std::size_t lo = static_cast<std::size_t>(blk) * kBlockRows;
    const std::size_t hi = std::min(n, lo + kBlockRows);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto ai = a.row(i);
      const auto bi = b.row(i);
      for (std::size_t h = 0; h < ka; ++h) {
        const double av = ai[h];
        if (av == 0.0) continue;
        for (std::size_t g = 0; g < kb; ++g) acc[h * kb + g] += av * bi[g];
      }
    }
  }
  Matrix out(ka, kb);
  auto flat = out.flat();
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const double* acc = partial.data() + blk * ka * kb;
    for (std::size_t w = 0; w < ka * kb; ++w) flat[w] += acc[w];
  }
  return out;
}

}  // namespace kernels
}  // namespace tinder
