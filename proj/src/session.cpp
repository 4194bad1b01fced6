#include "tinder/session.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "tinder/errors.hpp"
#include "tinder/json_io.hpp"
#include "tinder/metrics.hpp"

namespace tinder {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "tinder-session/1";

std::string random_session_id() {
  std::random_device rd;
  std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  static constexpr char hex[] = "0123456789abcdef";
  std::string id = "s-";
  for (int i = 0; i < 16; ++i, v >>= 4) id.push_back(hex[v & 0xF]);
  return id;
}

void require_active(const SessionState& state, const char* op) {
  if (state.status != SessionStatus::active)
    throw IllegalState(std::string(op) + ": session " + state.session_id + " is already accepted");
  if (state.history.empty()) throw IllegalState(std::string(op) + ": session has no history");
}

HistoryEntry make_entry(std::size_t iteration, std::uint64_t seed, FitResult fit,
                        double seconds) {
  HistoryEntry e;
  e.iteration = iteration;
  e.fit_seed = seed;
  e.beta = fit.beta;
  e.params = std::move(fit.params);
  e.assignment = std::move(fit.assignment);
  e.objective = fit.objective;
  e.log_likelihood = fit.log_likelihood;
  e.penalty_value = fit.penalty_value;
  e.wall_time_seconds = seconds;
  return e;
}

std::string header_mode_name(HeaderMode m) {
  switch (m) {
    case HeaderMode::absent: return "absent";
    case HeaderMode::present: return "present";
    case HeaderMode::detect: break;
  }
  return "detect";
}

HeaderMode header_mode_from(const std::string& s) {
  if (s == "absent") return HeaderMode::absent;
  if (s == "present") return HeaderMode::present;
  if (s == "detect") return HeaderMode::detect;
  throw FormatError("unknown header mode '" + s + "'");
}

}  // namespace

bool HistoryEntry::operator==(const HistoryEntry& o) const {
  return iteration == o.iteration && fit_seed == o.fit_seed && beta == o.beta &&
         params == o.params && assignment == o.assignment && objective == o.objective &&
         log_likelihood == o.log_likelihood && penalty_value == o.penalty_value &&
         max_ars_to_previous == o.max_ars_to_previous && novel == o.novel;
}

bool SessionState::operator==(const SessionState& o) const {
  const bool same_data = (data == o.data) || (data && o.data && *data == *o.data);
  return session_id == o.session_id && dataset == o.dataset && same_data && config == o.config &&
         novelty_ceiling == o.novelty_ceiling && store_soft == o.store_soft &&
         history == o.history && status == o.status;
}

std::vector<SoftAssignment> FeedbackHistory::assignments(std::size_t count) const {
  std::vector<SoftAssignment> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count && s < entries.size(); ++s) out.push_back(entries[s].assignment);
  return out;
}

std::string_view to_string(SessionStatus s) {
  return s == SessionStatus::accepted ? "accepted" : "active";
}

SessionState start_session(std::shared_ptr<const DataMatrix> data, const FitConfig& config,
                           SessionOptions options) {
  if (!data) throw ContractViolation("start_session: no data");
  config.validate();
  if (config.beta.is_auto && config.k == 1)
    throw InvalidConfig("automatic beta needs k >= 2 (log K would be 0)");

  SessionState state;
  state.session_id = options.session_id.empty() ? random_session_id() : options.session_id;
  state.dataset = std::move(options.dataset);
  state.data = std::move(data);
  state.config = config;
  state.novelty_ceiling = options.novelty_ceiling;
  state.store_soft = options.store_soft;

  FitConfig c = config;
  c.seed = derive_seed(config.seed, 0);
  const auto t0 = std::chrono::steady_clock::now();
  auto result = fit(*state.data, {}, c, 0.0);
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  state.history.entries.push_back(make_entry(0, c.seed, std::move(result), dt.count()));
  return state;
}

double resolve_beta(const SessionState& state) {
  if (state.history.empty()) throw IllegalState("resolve_beta: empty history");
  if (!state.config.beta.is_auto) return state.config.beta.value;
  if (state.config.k < 2) throw InvalidConfig("automatic beta needs k >= 2 (log K would be 0)");
  const double t = static_cast<double>(state.history.size());
  return std::abs(state.history.entries.front().log_likelihood) /
         (t * std::log(static_cast<double>(state.config.k)));
}

SessionState reject(const SessionState& state) {
  require_active(state, "reject");
  SessionState next = state;
  const std::size_t t = state.history.size();
  const double beta = resolve_beta(state);
  const auto targets = state.history.assignments(t);

  FitConfig c = state.config;
  c.seed = derive_seed(state.config.seed, t);
  const auto t0 = std::chrono::steady_clock::now();
  auto result = fit(*state.data, targets, c, beta);
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

  HistoryEntry e = make_entry(t, c.seed, std::move(result), dt.count());
  const auto hard = harden(e.assignment);
  double worst = -1.0;
  for (const auto& prev : state.history.entries)
    worst = std::max(worst, adjusted_rand(hard, harden(prev.assignment)));
  e.max_ars_to_previous = worst;
  e.novel = worst <= state.novelty_ceiling;
  next.history.entries.push_back(std::move(e));
  return next;
}

SessionState accept(const SessionState& state) {
  require_active(state, "accept");
  SessionState next = state;
  next.status = SessionStatus::accepted;
  return next;
}

DiversityReport diversity_report(const SessionState& state) {
  const std::size_t t = state.history.size();
  std::vector<HardClustering> hard;
  hard.reserve(t);
  for (const auto& e : state.history.entries) hard.push_back(harden(e.assignment));

  DiversityReport r{Matrix(t, t), Matrix(t, t), std::vector<std::optional<double>>(t),
                    std::vector<std::optional<double>>(t), std::nullopt};
  for (std::size_t a = 0; a < t; ++a) {
    r.ars(a, a) = 1.0;
    r.nmi(a, a) = 1.0;
    for (std::size_t b = a + 1; b < t; ++b) {
      r.ars(a, b) = r.ars(b, a) = adjusted_rand(hard[a], hard[b]);
      r.nmi(a, b) = r.nmi(b, a) = nmi(hard[a], hard[b]);
    }
  }
  for (std::size_t a = 0; a < t; ++a) {
    for (std::size_t b = 0; b < t; ++b)
      if (a != b) r.closest_ars[a] = std::max(r.closest_ars[a].value_or(-1.0), r.ars(a, b));
    if (a > 0) r.ars_to_previous[a] = r.ars(a, a - 1);
  }
  if (state.data && state.data->labels) {
    const HardClustering truth{*state.data->labels};
    std::vector<double> p;
    for (const auto& h : hard) p.push_back(purity(h, truth));
    r.purity = std::move(p);
  }
  return r;
}

ClusteringExport export_entry(const SessionState& state, std::size_t iteration) {
  if (iteration >= state.history.size()) throw ContractViolation("no such iteration");
  const auto& e = state.history.entries[iteration];
  ClusteringExport out;
  out.iteration = e.iteration;
  out.ids = state.data->ids;
  out.params = e.params;
  out.assignment = e.assignment;
  out.metrics = {{"beta", e.beta},
                 {"log_likelihood", e.log_likelihood},
                 {"objective", e.objective},
                 {"penalty", e.penalty_value},
                 {"max_ars_to_previous", e.max_ars_to_previous}};
  if (state.data->labels)
    out.metrics["purity"] = purity(harden(e.assignment), HardClustering{*state.data->labels});
  return out;
}

json session_to_json(const SessionState& state) {
  json history = json::array();
  for (const auto& e : state.history.entries) {
    json je{{"iteration", e.iteration},
            {"fit_seed", e.fit_seed},
            {"beta", e.beta},
            {"objective", e.objective},
            {"log_likelihood", e.log_likelihood},
            {"penalty", e.penalty_value},
            {"max_ars_to_previous", e.max_ars_to_previous},
            {"novel", e.novel},
            {"params", e.params},
            {"labels", harden(e.assignment).labels}};
    if (state.store_soft) je["responsibilities"] = e.assignment.resp;
    history.push_back(std::move(je));
  }
  json dataset{{"path", state.dataset.path},
               {"sha256", state.dataset.sha256},
               {"header", header_mode_name(state.dataset.header)},
               {"label_column", state.dataset.label_column
                                    ? json(*state.dataset.label_column)
                                    : json(nullptr)}};
  if (state.data) {
    dataset["n"] = state.data->n();
    dataset["d"] = state.data->d();
    dataset["fingerprint"] = data_fingerprint(*state.data);
  }
  return json{{"format", kFormatTag},
              {"session_id", state.session_id},
              {"status", std::string(to_string(state.status))},
              {"config", state.config},
              {"novelty_ceiling", state.novelty_ceiling},
              {"store_soft", state.store_soft},
              {"dataset", std::move(dataset)},
              {"history", std::move(history)}};
}

SessionState session_from_json(const json& j, std::shared_ptr<const DataMatrix> data) {
  if (!data) throw ContractViolation("session_from_json: no data");
  try {
    if (j.at("format").get<std::string>() != kFormatTag)
      throw FormatError("unsupported session format");
    SessionState s;
    s.session_id = j.at("session_id").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status != "active" && status != "accepted") throw FormatError("bad session status");
    s.status = status == "accepted" ? SessionStatus::accepted : SessionStatus::active;
    s.config = j.at("config").get<FitConfig>();
    s.novelty_ceiling = j.at("novelty_ceiling").get<double>();
    s.store_soft = j.at("store_soft").get<bool>();
    const auto& ds = j.at("dataset");
    s.dataset.path = ds.at("path").get<std::string>();
    s.dataset.sha256 = ds.at("sha256").get<std::string>();
    s.dataset.header = header_mode_from(ds.at("header").get<std::string>());
    if (!ds.at("label_column").is_null())
      s.dataset.label_column = ds.at("label_column").get<std::string>();
    if (ds.contains("n") && ds.at("n").get<std::size_t>() != data->n())
      throw FormatError("session dataset size does not match the loaded data");
    if (ds.contains("fingerprint") && ds.at("fingerprint").get<std::string>() != data_fingerprint(*data))
      throw FormatError("session was saved against different data");
    s.data = std::move(data);

    for (const auto& je : j.at("history")) {
      HistoryEntry e;
      e.iteration = je.at("iteration").get<std::size_t>();
      if (e.iteration != s.history.size()) throw FormatError("history iterations are not contiguous");
      e.fit_seed = je.at("fit_seed").get<std::uint64_t>();
      e.beta = je.at("beta").get<double>();
      e.objective = je.at("objective").get<double>();
      e.log_likelihood = je.at("log_likelihood").get<double>();
      e.penalty_value = je.at("penalty").get<double>();
      e.max_ars_to_previous = je.at("max_ars_to_previous").get<double>();
      e.novel = je.at("novel").get<bool>();
      e.params = je.at("params").get<MixtureParams>();
      const HardClustering labels{je.at("labels").get<std::vector<int>>()};
      if (je.contains("responsibilities")) {
        e.assignment.resp = je.at("responsibilities").get<Matrix>();
      } else {
        e.assignment = responsibilities(*s.data, e.params);
      }
      if (e.assignment.n() != s.data->n() || !(harden(e.assignment) == labels))
        throw FormatError("stored labels of iteration " + std::to_string(e.iteration) +
                          " do not match the stored parameters");
      s.history.entries.push_back(std::move(e));
    }
    if (s.history.empty()) throw FormatError("session has no history");
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid session JSON: ") + e.what());
  }
}

void save_session(const SessionState& state, const fs::path& path) {
  write_file(path, session_to_json(state).dump(2) + "\n");
}

std::shared_ptr<const DataMatrix> load_dataset(const fs::path& path, const CsvOptions& options,
                                               DatasetRef& ref) {
  const auto bytes = read_file(path);
  auto data = std::make_shared<const DataMatrix>(parse_csv(bytes, options));
  ref.path = fs::absolute(path).lexically_normal().string();
  ref.sha256 = content_hash(bytes);
  ref.header = options.header;
  ref.label_column = options.label_column;
  return data;
}

SessionState load_session(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError("cannot parse session file '" + path.string() + "': " + e.what());
  }
  const auto& ds = j.at("dataset");
  const auto data_path = ds.at("path").get<std::string>();
  if (data_path.empty()) throw FormatError("session has no dataset path to reload from");
  const auto bytes = read_file(data_path);
  if (content_hash(bytes) != ds.at("sha256").get<std::string>())
    throw InvalidData("dataset '" + data_path + "' changed since the session was saved");
  CsvOptions opts;
  opts.header = header_mode_from(ds.at("header").get<std::string>());
  if (!ds.at("label_column").is_null()) opts.label_column = ds.at("label_column").get<std::string>();
  auto data = std::make_shared<const DataMatrix>(parse_csv(bytes, opts));
  return session_from_json(j, std::move(data));
}

}  // namespace tinder
