// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "oracles.hpp"
#include "tinder/compare.hpp"
#include "tinder/data_io.hpp"
#include "tinder/metrics.hpp"
#include "tinder/optimizer.hpp"
#include "tinder/penalty.hpp"
#include "tinder/service.hpp"
#include "tinder/session.hpp"

using namespace tinder;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// Four blobs, K = 2, beta = 1, two rejects.
void four_blob_alternatives() {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto start = std::chrono::steady_clock::now();
  const auto data = std::make_shared<const DataMatrix>(generate_blobs(four_blob_scenario(1)));
  FitConfig cfg;
  cfg.k = 2;
  cfg.beta = BetaPolicy::fixed(1.0);
  cfg.seed = 7;
  auto s = start_session(data, cfg, {"s-acceptance"});
  s = reject(reject(s));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  omp_set_num_threads(saved);

  const auto r = diversity_report(s);
  double max_ars = -1.0;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) max_ars = std::max(max_ars, r.ars(a, b));
  const double ll0 = s.history.entries[0].log_likelihood;
  const double floor = ll0 - 0.15 * std::abs(ll0);
  double worst_ll = ll0;
  for (const auto& e : s.history.entries) worst_ll = std::min(worst_ll, e.log_likelihood);
  const bool ok = s.history.size() == 3 && max_ars <= 0.3 && worst_ll >= floor && seconds < 60.0;
  report(ok, "four-blob alternatives (K=2, beta=1, 2 rejects)",
         "clusterings=" + std::to_string(s.history.size()) + " max_pairwise_ars=" + num(max_ars) +
             " (<= 0.3) min_ll=" + num(worst_ll, 1) + " (>= " + num(floor, 1) + ") runtime=" + num(seconds, 2) +
             "s (< 60)");
}

// Ten blobs, K = 10, auto beta, 5 iterations against 5 seed-matched restarts.
void ten_blob_diversity() {
  const auto data = generate_blobs(ten_blob_scenario(1));
  FitConfig cfg;
  cfg.k = 10;
  cfg.beta = BetaPolicy::automatic();
  cfg.seed = 1;
  const auto c = compare_methods(data, cfg, 5);
  const bool direction = c.tinder.max_pairwise_ars < c.baseline.mean_pairwise_ars;
  const double gap = std::abs(*c.tinder.mean_purity - *c.baseline.mean_purity);
  report(direction && gap <= 0.25, "ten-blob diversity vs random restarts (K=10, auto beta, T=5)",
         "tinder_max_pairwise_ars=" + num(c.tinder.max_pairwise_ars) +
             " < baseline_mean_pairwise_ars=" + num(c.baseline.mean_pairwise_ars) + " [" +
             (direction ? "ok" : "violated") + "]; mean_purity tinder=" + num(*c.tinder.mean_purity) +
             " baseline=" + num(*c.baseline.mean_purity) + " gap=" + num(gap) + " (<= 0.25) [" +
             (gap <= 0.25 ? "ok" : "violated") + "]");
}

void gradient_correctness() {
  std::mt19937_64 rng(20240601);
  double worst_ll = 0.0, worst_pen = 0.0;
  const int instances = 100;
  for (int i = 0; i < instances; ++i) {
    const auto data = oracle::random_data(rng, 20, 2);
    const auto theta = oracle::random_params(rng, 3, 2);
    const std::vector<SoftAssignment> history{oracle::random_assignment(rng, 20, 3),
                                              oracle::random_assignment(rng, 20, 3)};
    const auto fd_ll = oracle::finite_difference(theta, [&](const MixtureParams& q) { return log_likelihood(data, q); });
    const auto fd_pen =
        oracle::finite_difference(theta, [&](const MixtureParams& q) { return penalty(q, history, data); });
    worst_ll = std::max(worst_ll, oracle::relative_error(ll_gradient(data, theta), fd_ll));
    worst_pen = std::max(worst_pen, oracle::relative_error(penalty_gradient(theta, history, data), fd_pen));
  }
  report(worst_ll < 1e-4 && worst_pen < 1e-4, "gradient correctness (100 instances, central differences)",
         "max_rel_err log_likelihood=" + sci(worst_ll) + " penalty=" + sci(worst_pen) + " (< 1e-4)");
}

void metric_oracles() {
  using H = HardClustering;
  const double ars = adjusted_rand(H{{0, 0, 1, 1}}, H{{0, 1, 0, 1}});
  const double nmi0 = nmi(H{{0, 0, 1, 1}}, H{{0, 1, 0, 1}});
  const double i = 0.5 * std::log(4.0 / 3.0) + 0.25 * std::log(2.0 / 3.0) + 0.25 * std::log(2.0);
  const double hb = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  const double nmi_oracle = i / (0.5 * (std::log(2.0) + hb));
  const double nmi1 = nmi(H{{0, 0, 1, 1}}, H{{0, 0, 0, 1}});
  const double pur = purity(H{{0, 0, 1, 1, 1}}, H{{0, 1, 1, 1, 0}});

  std::size_t pairs = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 7; ++n) {
    const auto parts = oracle::all_partitions(n, 3);
    for (const auto& a : parts)
      for (const auto& b : parts) {
        const double got = adjusted_rand(H{a}, H{b});
        const double want = oracle::pairwise_ars(a, b);
        mismatches += want == -2.0 ? got != 0.0 : std::abs(got - want) > 1e-12;
        ++pairs;
      }
  }
  const bool ok = std::abs(ars + 0.5) <= 1e-9 && std::abs(nmi0) <= 1e-9 && std::abs(nmi1 - nmi_oracle) <= 1e-3 &&
                  std::abs(nmi1 - 0.3438) <= 1e-3 && pur == 0.6 && mismatches == 0;
  report(ok, "metric oracles",
         "ars=" + num(ars, 12) + " nmi_independent=" + sci(nmi0) + " nmi=" + num(nmi1, 6) + " (oracle " +
             num(nmi_oracle, 6) + ") purity=" + num(pur, 12) + " exhaustive_pairs=" + std::to_string(pairs) +
             " mismatches=" + std::to_string(mismatches));
}

void penalty_invariants() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> kdist(2, 5);
  double worst_bound = -1e300, worst_sym = 0.0, worst_perm = 0.0, min_f = 1e300;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k1 = kdist(rng), k2 = kdist(rng);
    const auto a = oracle::random_assignment(rng, 30, k1);
    const auto b = oracle::random_assignment(rng, 30, k2);
    const auto j = cocluster_joint(a, b);
    const double f = mutual_information(j);
    min_f = std::min(min_f, f);
    worst_bound = std::max(worst_bound, f - std::min(entropy(j.row_marginal), entropy(j.col_marginal)));
    worst_sym = std::max(worst_sym, std::abs(mutual_information(cocluster_joint(b, a)) - f));
    std::vector<std::size_t> perm(k2);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    SoftAssignment pb = b;
    for (std::size_t r = 0; r < 30; ++r)
      for (std::size_t c = 0; c < k2; ++c) pb.resp(r, c) = b.resp(r, perm[c]);
    worst_perm = std::max(worst_perm, std::abs(mutual_information(cocluster_joint(a, pb)) - f));
  }
  report(min_f >= 0.0 && worst_bound <= 1e-9 && worst_sym <= 1e-12 && worst_perm <= 1e-12,
         "penalty invariants (1000 random pairs)",
         "min_f=" + sci(min_f) + " max(f - min_entropy)=" + sci(worst_bound) + " symmetry=" + sci(worst_sym) +
             " permutation=" + sci(worst_perm));
}

bool monotone(const FitResult& r) {
  for (std::size_t s = 1; s < r.trace.size(); ++s)
    if (r.trace[s] < r.trace[s - 1]) return false;
  return true;
}

void optimizer_properties() {
  const auto data = generate_blobs(four_blob_scenario(3));
  FitConfig cfg;
  cfg.k = 4;
  cfg.seed = 42;
  const auto four = fit(data, {}, cfg);
  const double ars = adjusted_rand(harden(four.assignment), HardClustering{*data.labels});

  std::size_t fits = 1, non_monotone = !monotone(four);
  cfg.k = 2;
  const auto plain = fit(data, {}, cfg);
  const std::vector<SoftAssignment> history{plain.assignment};
  const auto zero = fit(data, history, cfg, 0.0);
  const bool identical = zero.params == plain.params && zero.assignment.resp == plain.assignment.resp &&
                         zero.trace == plain.trace && zero.log_likelihood == plain.log_likelihood;
  for (const auto* r : {&plain, &zero}) non_monotone += !monotone(*r), ++fits;
  for (double beta : {1.0, 100.0, 10000.0}) {
    non_monotone += !monotone(fit(data, history, cfg, beta));
    ++fits;
  }
  for (const auto& r : baseline_restarts(data, cfg, 3)) non_monotone += !monotone(r), ++fits;
  report(non_monotone == 0 && identical && ars >= 0.99, "optimizer monotonicity and reduction",
         "non_monotone_traces=" + std::to_string(non_monotone) + "/" + std::to_string(fits) +
             " beta0_bit_identical=" + (identical ? "yes" : "no") + " k4_ars=" + num(ars) + " (>= 0.99)");
}

void determinism_and_persistence() {
  const auto dir = fs::temp_directory_path() / "tinder_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto csv = dir / "blobs.csv";
  write_file(csv, data_to_csv(generate_blobs(four_blob_scenario(4))));

  auto run_session = [&] {
    SessionOptions opts;
    opts.session_id = "s-replay";
    const auto data = load_dataset(csv, {HeaderMode::detect, "label"}, opts.dataset);
    FitConfig cfg;
    cfg.k = 3;
    cfg.beta = BetaPolicy::automatic();
    cfg.seed = 5;
    cfg.restarts = 4;
    return reject(reject(start_session(data, cfg, opts)));
  };
  const auto a = run_session();
  const auto b = run_session();
  bool exports_equal = true;
  for (std::size_t t = 0; t < 3; ++t)
    exports_equal = exports_equal && clustering_csv(export_entry(a, t), true) == clustering_csv(export_entry(b, t), true) &&
                    clustering_json(export_entry(a, t), true) == clustering_json(export_entry(b, t), true);

  save_session(a, dir / "s.json");
  const auto loaded = load_session(dir / "s.json");
  const bool round_trip = loaded == a && session_to_json(loaded) == session_to_json(a);

  ServiceOptions so;
  so.data_dir = dir / "service";
  so.restarts = 2;
  nlohmann::json before_history, before_clustering;
  std::string sid;
  {
    SessionService svc(so);
    const auto id = svc.upload_dataset(read_file(csv), {HeaderMode::detect, "label"}).body["dataset_id"];
    sid = svc.create_session(nlohmann::json{{"dataset_id", id}, {"k", 2}, {"beta", 1}, {"seed", 3}}.dump())
              .body["session_id"];
    svc.reject_session(sid);
    before_history = svc.get_history(sid).body;
    before_clustering = svc.get_clustering(sid, 1, true, MemberOrder::responsibility).body;
  }
  SessionService restarted(so);
  restarted.restore();
  const bool restart_ok = restarted.get_history(sid).body == before_history &&
                          restarted.get_clustering(sid, 1, true, MemberOrder::responsibility).body == before_clustering;

  report(exports_equal && round_trip && restart_ok, "determinism and persistence",
         std::string("replay_exports_identical=") + (exports_equal ? "yes" : "no") +
             " session_json_round_trip=" + (round_trip ? "yes" : "no") +
             " service_restart_preserves_history=" + (restart_ok ? "yes" : "no"));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      four_blob_alternatives, ten_blob_diversity,  gradient_correctness,       metric_oracles,
      penalty_invariants,     optimizer_properties, determinism_and_persistence};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      report(false, "criterion raised", e.what());
    }
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
