#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tinder/errors.hpp"
#include "tinder/penalty.hpp"

using namespace tinder;

namespace {

SoftAssignment rows(std::vector<std::vector<double>> r) {
  SoftAssignment s{Matrix(r.size(), r.front().size())};
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t c = 0; c < r[i].size(); ++c) s.resp(i, c) = r[i][c];
  return s;
}

std::vector<std::vector<double>> to_nested(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

void check_joint(const CoclusterJoint& j, std::vector<std::vector<double>> expected) {
  REQUIRE(j.joint.rows() == expected.size());
  for (std::size_t r = 0; r < expected.size(); ++r)
    for (std::size_t c = 0; c < expected[r].size(); ++c)
      CHECK(j.joint(r, c) == doctest::Approx(expected[r][c]).epsilon(1e-15));
}

}  // namespace

TEST_CASE("cocluster_joint examples") {
  const auto id = rows({{1, 0}, {0, 1}});
  check_joint(cocluster_joint(id, id), {{0.5, 0}, {0, 0.5}});
  check_joint(cocluster_joint(id, rows({{0.5, 0.5}, {0.5, 0.5}})), {{0.25, 0.25}, {0.25, 0.25}});
  const auto j = cocluster_joint(oracle::one_hot({0, 0, 1, 1}, 2), oracle::one_hot({0, 0, 0, 1}, 2));
  check_joint(j, {{0.5, 0}, {0.25, 0.25}});
  CHECK(j.row_marginal == std::vector<double>{0.5, 0.5});
  CHECK(j.col_marginal == std::vector<double>{0.75, 0.25});
  CHECK_THROWS_AS(cocluster_joint(id, oracle::one_hot({0, 1, 0}, 2)), ContractViolation);
}

TEST_CASE("mutual_information examples") {
  const auto id = rows({{1, 0}, {0, 1}});
  CHECK(mutual_information(cocluster_joint(id, id)) ==
        doctest::Approx(std::numbers::ln2).epsilon(1e-12));
  CHECK(mutual_information(cocluster_joint(id, rows({{0.5, 0.5}, {0.5, 0.5}}))) == 0.0);
  const double brute = 0.5 * std::log(4.0 / 3.0) + 0.25 * std::log(2.0 / 3.0) + 0.25 * std::log(2.0);
  const double mi = mutual_information(
      cocluster_joint(oracle::one_hot({0, 0, 1, 1}, 2), oracle::one_hot({0, 0, 0, 1}, 2)));
  CHECK(mi == doctest::Approx(brute).epsilon(1e-12));
  CHECK(mi == doctest::Approx(0.21576).epsilon(1e-4));
}

TEST_CASE("mutual_information agrees with the table oracle on random soft inputs") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = oracle::random_assignment(rng, 30, 2 + trial % 4);
    const auto b = oracle::random_assignment(rng, 30, 2 + trial % 3);
    const auto j = cocluster_joint(a, b);
    CHECK(mutual_information(j) == doctest::Approx(oracle::table_mi(to_nested(j.joint))).epsilon(1e-10));
  }
}

TEST_CASE("mutual_information properties") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = oracle::random_assignment(rng, 25, 3);
    const auto b = oracle::random_assignment(rng, 25, 4);
    const auto ab = cocluster_joint(a, b);
    const double mi = mutual_information(ab);
    CHECK(mi >= 0.0);
    CHECK(mi <= std::min(entropy(ab.row_marginal), entropy(ab.col_marginal)) + 1e-12);
    CHECK(std::abs(mutual_information(cocluster_joint(b, a)) - mi) < 1e-12);

    double total = 0.0;
    for (double v : ab.joint.flat()) total += v;
    CHECK(std::abs(total - 1.0) < 1e-9);
    for (std::size_t h = 0; h < 3; ++h) {
      double s = 0.0;
      for (std::size_t g = 0; g < 4; ++g) s += ab.joint(h, g);
      CHECK(std::abs(s - ab.row_marginal[h]) < 1e-9);
    }

    SoftAssignment permuted = b;
    const std::size_t perm[] = {3, 1, 0, 2};
    for (std::size_t i = 0; i < 25; ++i)
      for (std::size_t g = 0; g < 4; ++g) permuted.resp(i, g) = b.resp(i, perm[g]);
    CHECK(std::abs(mutual_information(cocluster_joint(a, permuted)) - mi) < 1e-12);
  }
}

TEST_CASE("penalty: empty history and self-similarity") {
  std::mt19937_64 rng(4);
  const auto data = oracle::random_data(rng, 10, 2);
  const auto theta = oracle::random_params(rng, 2, 2);
  CHECK(penalty(theta, {}, data) == 0.0);
  const auto g = penalty_gradient(theta, {}, data);
  CHECK(g.size() == theta.parameter_count());
  for (double v : g) CHECK(v == 0.0);

  // Two far-apart groups of equal size; the fit assigns them deterministically.
  Matrix m(6, 1);
  for (std::size_t i = 0; i < 6; ++i) m(i, 0) = i < 3 ? -50.0 - i : 50.0 + i;
  const auto split = make_data(std::move(m));
  MixtureParams p;
  p.weight_logits = {0, 0};
  p.means = Matrix(2, 1);
  p.means(0, 0) = -50;
  p.means(1, 0) = 50;
  p.log_variances = Matrix(2, 1);
  const std::vector<SoftAssignment> self{responsibilities(split, p)};
  CHECK(penalty(p, self, split) == doctest::Approx(std::numbers::ln2).epsilon(1e-9));
}

TEST_CASE("penalty: sums pairwise terms over the history") {
  std::mt19937_64 rng(12);
  const auto data = oracle::random_data(rng, 20, 2);
  const auto theta = oracle::random_params(rng, 3, 2);
  const std::vector<SoftAssignment> history{oracle::random_assignment(rng, 20, 3),
                                            oracle::random_assignment(rng, 20, 2)};
  const auto current = responsibilities(data, theta);
  const double expected = mutual_information(cocluster_joint(current, history[0])) +
                          mutual_information(cocluster_joint(current, history[1]));
  CHECK(penalty(theta, history, data) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("penalty_gradient: uninformative target gives zero") {
  std::mt19937_64 rng(6);
  const auto data = oracle::random_data(rng, 20, 2);
  const auto theta = oracle::random_params(rng, 3, 2);
  SoftAssignment flat{Matrix(20, 4)};
  for (auto& v : flat.resp.flat()) v = 0.25;
  const std::vector<SoftAssignment> history{flat};
  for (double v : penalty_gradient(theta, history, data)) CHECK(std::abs(v) < 1e-8);
}

TEST_CASE("penalty_gradient: matches central finite differences") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const auto mode = trial % 4 == 3 ? CovarianceMode::spherical : CovarianceMode::diagonal;
    const auto data = oracle::random_data(rng, 20, 2);
    const auto theta = oracle::random_params(rng, 3, 2, mode);
    const std::vector<SoftAssignment> history{oracle::random_assignment(rng, 20, 3),
                                              oracle::random_assignment(rng, 20, 4)};
    const auto fd = oracle::finite_difference(
        theta, [&](const MixtureParams& q) { return penalty(q, history, data); });
    CHECK(oracle::relative_error(penalty_gradient(theta, history, data), fd) < 1e-4);
  }
}

TEST_CASE("penalty_gradient: hard history targets") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto data = oracle::random_data(rng, 24, 3);
    const auto theta = oracle::random_params(rng, 2, 3);
    std::vector<int> labels(24);
    for (std::size_t i = 0; i < 24; ++i) labels[i] = static_cast<int>((i * 7 + trial) % 3);
    const std::vector<SoftAssignment> history{oracle::one_hot(labels, 3)};
    const auto fd = oracle::finite_difference(
        theta, [&](const MixtureParams& q) { return penalty(q, history, data); });
    CHECK(oracle::relative_error(penalty_gradient(theta, history, data), fd) < 1e-4);
  }
}
