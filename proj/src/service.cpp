#include "tinder/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

#include "tinder/errors.hpp"
#include "tinder/json_io.hpp"
#include "tinder/metrics.hpp"

namespace tinder {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Reply error_reply(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

Reply not_found(const std::string& what) { return error_reply(404, what + " not found"); }

// Maps library errors onto status codes.
template <class F>
Reply guarded(F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    Reply r = error_reply(400, e.what());
    r.body["row"] = e.row();
    r.body["column"] = e.column();
    return r;
  } catch (const FormatError& e) {
    return error_reply(400, e.what());
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  } catch (const InvalidConfig& e) {
    return error_reply(422, e.what());
  } catch (const ContractViolation& e) {
    return error_reply(422, e.what());
  } catch (const InvalidData& e) {
    return error_reply(422, e.what());
  } catch (const IllegalState& e) {
    return error_reply(409, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

std::string header_name(HeaderMode m) {
  switch (m) {
    case HeaderMode::absent: return "absent";
    case HeaderMode::present: return "present";
    case HeaderMode::detect: break;
  }
  return "detect";
}

HeaderMode header_from(std::string_view s) {
  if (s == "present" || s == "true" || s == "yes" || s == "1") return HeaderMode::present;
  if (s == "absent" || s == "false" || s == "no" || s == "0") return HeaderMode::absent;
  if (s == "detect" || s == "auto") return HeaderMode::detect;
  throw FormatError("header must be present, absent or detect");
}

double log_density(const DataMatrix& data, const MixtureParams& p, std::size_t i, std::size_t c) {
  double s = 0.0;
  for (std::size_t j = 0; j < data.d(); ++j) {
    const double v = p.variance(c, j);
    const double diff = data.values(i, j) - p.means(c, j);
    s -= 0.5 * (std::log(2.0 * std::numbers::pi * v) + diff * diff / v);
  }
  return s;
}

json diversity_json(const DiversityReport& r, std::size_t t) {
  json out{{"ars_to_previous", r.ars_to_previous[t] ? json(*r.ars_to_previous[t]) : json(nullptr)}};
  std::optional<double> max_prev;
  for (std::size_t s = 0; s < t; ++s) max_prev = std::max(max_prev.value_or(-1.0), r.ars(t, s));
  out["ars_max_pairwise"] = max_prev ? json(*max_prev) : json(nullptr);
  return out;
}

}  // namespace

std::vector<ClusterSummary> summarize_clusters(const DataMatrix& data, const MixtureParams& params,
                                               const SoftAssignment& assignment, std::size_t top,
                                               MemberOrder order) {
  const std::size_t n = data.n();
  const std::size_t k = params.k();
  if (assignment.n() != n || assignment.k() != k)
    throw ContractViolation("summarize_clusters: assignment shape mismatch");
  const auto hard = harden(assignment);
  const auto weights = params.weights();

  std::vector<ClusterSummary> out(k);
  std::vector<std::size_t> rows(n);
  std::vector<double> score(n);
  for (std::size_t c = 0; c < k; ++c) {
    auto& s = out[c];
    s.index = c;
    s.weight = weights[c];
    s.size = static_cast<std::size_t>(std::count(hard.labels.begin(), hard.labels.end(), static_cast<int>(c)));
    s.centroid.assign(params.means.row(c).begin(), params.means.row(c).end());

    for (std::size_t i = 0; i < n; ++i)
      score[i] = order == MemberOrder::responsibility ? assignment.resp(i, c) : log_density(data, params, i, c);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const std::size_t m = std::min(top, n);
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(m), rows.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (score[a] != score[b]) return score[a] > score[b];
                        return data.ids[a] < data.ids[b];
                      });
    for (std::size_t r = 0; r < m; ++r) s.top_members.push_back(data.ids[rows[r]]);
  }
  return out;
}

void to_json(json& j, const ClusterSummary& s) {
  j = json{{"index", s.index},
           {"size", s.size},
           {"weight", s.weight},
           {"top_members", s.top_members},
           {"centroid", s.centroid}};
}

std::shared_ptr<const SessionState> SessionService::Slot::snapshot() const {
  std::lock_guard lock(snapshot_mutex);
  return state;
}

void SessionService::Slot::publish(std::shared_ptr<const SessionState> next) {
  std::lock_guard lock(snapshot_mutex);
  state = std::move(next);
}

SessionService::SessionService(ServiceOptions options) : options_(std::move(options)) {
  fs::create_directories(options_.data_dir / "datasets");
  fs::create_directories(options_.data_dir / "sessions");
}

SessionService::~SessionService() = default;

fs::path SessionService::session_path(const std::string& id) const {
  return options_.data_dir / "sessions" / (id + ".json");
}

void SessionService::save(const SessionState& state) const { save_session(state, session_path(state.session_id)); }

void SessionService::restore() {
  const auto dataset_dir = options_.data_dir / "datasets";
  std::vector<fs::path> metas;
  for (const auto& entry : fs::directory_iterator(dataset_dir))
    if (entry.path().extension() == ".json") metas.push_back(entry.path());
  std::sort(metas.begin(), metas.end());
  for (const auto& meta_path : metas) {
    const auto meta = json::parse(read_file(meta_path));
    CsvOptions opts;
    opts.header = header_from(meta.at("header").get<std::string>());
    if (!meta.at("label_column").is_null()) opts.label_column = meta.at("label_column").get<std::string>();
    auto ds = std::make_shared<Dataset>();
    ds->id = meta.at("dataset_id").get<std::string>();
    ds->data = load_dataset(dataset_dir / (ds->id + ".csv"), opts, ds->ref);
    if (ds->ref.sha256 != ds->id) throw InvalidData("stored dataset " + ds->id + " does not match its hash");
    std::unique_lock lock(datasets_mutex_);
    datasets_[ds->id] = std::move(ds);
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(options_.data_dir / "sessions"))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const auto j = json::parse(read_file(path));
    const auto ds = find_dataset(j.at("dataset").at("sha256").get<std::string>());
    auto state = ds ? session_from_json(j, ds->data) : load_session(path);
    auto slot = std::make_shared<Slot>();
    const auto id = state.session_id;
    slot->state = std::make_shared<const SessionState>(std::move(state));
    std::unique_lock lock(sessions_mutex_);
    sessions_[id] = std::move(slot);
  }
}

void SessionService::persist_all() {
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, slot] : sessions_) slots.push_back(slot);
  }
  for (const auto& slot : slots) {
    // Waits for an in-flight mutation so the file reflects a finished state.
    std::lock_guard lock(slot->mutate);
    save(*slot->snapshot());
  }
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::shared_ptr<SessionService::Slot> SessionService::find_slot(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<const SessionService::Dataset> SessionService::find_dataset(const std::string& id) const {
  std::shared_lock lock(datasets_mutex_);
  const auto it = datasets_.find(id);
  return it == datasets_.end() ? nullptr : it->second;
}

Reply SessionService::upload_dataset(const std::string& body, const CsvOptions& options) {
  return guarded([&]() -> Reply {
    const auto id = content_hash(body);
    if (const auto existing = find_dataset(id)) {
      if (existing->ref.header != options.header || existing->ref.label_column != options.label_column)
        return error_reply(409, "dataset " + id + " was registered with different parse options");
      return {200, json{{"dataset_id", id},
                        {"n", existing->data->n()},
                        {"d", existing->data->d()},
                        {"has_labels", existing->data->labels.has_value()}}};
    }
    auto data = std::make_shared<const DataMatrix>(parse_csv(body, options));

    const auto dir = options_.data_dir / "datasets";
    const auto csv_path = dir / (id + ".csv");
    write_file(csv_path, body);
    json meta{{"dataset_id", id},
              {"header", header_name(options.header)},
              {"label_column", options.label_column ? json(*options.label_column) : json(nullptr)},
              {"n", data->n()},
              {"d", data->d()}};
    write_file(dir / (id + ".json"), meta.dump(2) + "\n");

    auto ds = std::make_shared<Dataset>();
    ds->id = id;
    ds->ref.path = fs::absolute(csv_path).lexically_normal().string();
    ds->ref.sha256 = id;
    ds->ref.header = options.header;
    ds->ref.label_column = options.label_column;
    ds->data = std::move(data);

    std::unique_lock lock(datasets_mutex_);
    const auto [it, inserted] = datasets_.emplace(id, std::move(ds));
    const auto& d = *it->second->data;
    return {inserted ? 201 : 200,
            json{{"dataset_id", id}, {"n", d.n()}, {"d", d.d()}, {"has_labels", d.labels.has_value()}}};
  });
}

json SessionService::iteration_body(const SessionState& state, std::size_t t) const {
  const auto& e = state.history.entries[t];
  json clusters = summarize_clusters(*state.data, e.params, e.assignment, options_.top_members);
  return json{{"session_id", state.session_id},
              {"iteration", e.iteration},
              {"status", std::string(to_string(state.status))},
              {"beta", e.beta},
              {"log_likelihood", e.log_likelihood},
              {"objective", e.objective},
              {"penalty", e.penalty_value},
              {"novel", e.novel},
              {"clusters", std::move(clusters)}};
}

Reply SessionService::create_session(const std::string& body) {
  return guarded([&]() -> Reply {
    const auto req = json::parse(body);
    if (!req.is_object()) return error_reply(400, "request body must be a JSON object");
    if (!req.contains("dataset_id") || !req.at("dataset_id").is_string())
      return error_reply(422, "dataset_id is required");
    const auto ds = find_dataset(req.at("dataset_id").get<std::string>());
    if (!ds) return not_found("dataset");

    FitConfig config;
    config.restarts = options_.restarts;
    if (!req.contains("k") || !req.at("k").is_number_integer() || req.at("k").get<long long>() < 1)
      return error_reply(422, "k must be a positive integer");
    config.k = req.at("k").get<std::size_t>();
    config.beta = req.contains("beta") ? req.at("beta").get<BetaPolicy>() : BetaPolicy::fixed(1.0);
    if (req.contains("seed")) {
      if (!req.at("seed").is_number_unsigned()) return error_reply(422, "seed must be a non-negative integer");
      config.seed = req.at("seed").get<std::uint64_t>();
    }
    if (req.contains("restarts")) {
      if (!req.at("restarts").is_number_unsigned()) return error_reply(422, "restarts must be a positive integer");
      config.restarts = req.at("restarts").get<std::size_t>();
    }
    if (req.contains("covariance_mode")) {
      try {
        config.covariance_mode = covariance_mode_from_string(req.at("covariance_mode").get<std::string>());
      } catch (const Error& e) {
        return error_reply(422, e.what());
      }
    }
    SessionOptions opts;
    opts.dataset = ds->ref;
    opts.store_soft = req.value("store_soft", false);
    if (req.contains("novelty_ceiling")) opts.novelty_ceiling = req.at("novelty_ceiling").get<double>();

    auto state = std::make_shared<const SessionState>(start_session(ds->data, config, opts));
    save(*state);
    auto slot = std::make_shared<Slot>();
    slot->state = state;
    {
      std::unique_lock lock(sessions_mutex_);
      sessions_[state->session_id] = slot;
    }
    return {201, iteration_body(*state, 0)};
  });
}

template <class F>
Reply SessionService::mutate(const std::string& id, F&& f,
                             std::shared_ptr<const SessionState>& published) {
  const auto slot = find_slot(id);
  if (!slot) return not_found("session");
  std::unique_lock lock(slot->mutate, std::try_to_lock);
  if (!lock.owns_lock()) return error_reply(409, "session " + id + " is busy with another request");
  return guarded([&]() -> Reply {
    auto next = std::make_shared<const SessionState>(f(*slot->snapshot()));
    save(*next);
    slot->publish(next);
    published = std::move(next);
    return {200, json()};
  });
}

Reply SessionService::reject_session(const std::string& id) {
  std::shared_ptr<const SessionState> state;
  Reply r = mutate(id, [](const SessionState& s) { return reject(s); }, state);
  if (r.status != 200) return r;
  const std::size_t t = state->iteration();
  r.body = iteration_body(*state, t);
  r.body["diversity"] = diversity_json(diversity_report(*state), t);
  return r;
}

Reply SessionService::accept_session(const std::string& id) {
  std::shared_ptr<const SessionState> state;
  Reply r = mutate(id, [](const SessionState& s) { return accept(s); }, state);
  if (r.status != 200) return r;
  r.body = json{{"session_id", id}, {"status", "accepted"}, {"iteration", state->iteration()}};
  return r;
}

Reply SessionService::get_session(const std::string& id) {
  const auto slot = find_slot(id);
  if (!slot) return not_found("session");
  const auto state = slot->snapshot();
  return {200, json{{"session_id", id},
                    {"status", std::string(to_string(state->status))},
                    {"iteration", state->iteration()},
                    {"dataset_id", state->dataset.sha256},
                    {"config", state->config},
                    {"n", state->data->n()},
                    {"d", state->data->d()}}};
}

Reply SessionService::get_history(const std::string& id) {
  const auto slot = find_slot(id);
  if (!slot) return not_found("session");
  const auto state = slot->snapshot();
  return guarded([&]() -> Reply {
    const auto report = diversity_report(*state);
    json iterations = json::array();
    for (std::size_t t = 0; t < state->history.size(); ++t) {
      const auto& e = state->history.entries[t];
      json it{{"iteration", e.iteration},
              {"beta", e.beta},
              {"log_likelihood", e.log_likelihood},
              {"objective", e.objective},
              {"penalty", e.penalty_value},
              {"max_ars_to_previous", e.max_ars_to_previous},
              {"novel", e.novel},
              {"closest_ars", report.closest_ars[t] ? json(*report.closest_ars[t]) : json(nullptr)},
              {"ars_to_previous", report.ars_to_previous[t] ? json(*report.ars_to_previous[t]) : json(nullptr)}};
      if (report.purity) it["purity"] = (*report.purity)[t];
      iterations.push_back(std::move(it));
    }
    return {200, json{{"session_id", id},
                      {"status", std::string(to_string(state->status))},
                      {"config", state->config},
                      {"iterations", std::move(iterations)},
                      {"ars", report.ars},
                      {"nmi", report.nmi}}};
  });
}

Reply SessionService::get_clustering(const std::string& id, std::size_t t, bool soft, MemberOrder order) {
  const auto slot = find_slot(id);
  if (!slot) return not_found("session");
  const auto state = slot->snapshot();
  if (t >= state->history.size()) return not_found("iteration");
  const auto& e = state->history.entries[t];
  json assignment{{"ids", state->data->ids}, {"labels", harden(e.assignment).labels}};
  if (soft) assignment["responsibilities"] = e.assignment.resp;
  return {200, json{{"session_id", id},
                    {"iteration", e.iteration},
                    {"order", order == MemberOrder::density ? "density" : "responsibility"},
                    {"params", e.params},
                    {"assignment", std::move(assignment)},
                    {"clusters", summarize_clusters(*state->data, e.params, e.assignment,
                                                    options_.top_members, order)}}};
}

Reply SessionService::get_points(const std::string& id, std::optional<std::size_t> t) {
  const auto slot = find_slot(id);
  if (!slot) return not_found("session");
  const auto state = slot->snapshot();
  const std::size_t it = t.value_or(state->iteration());
  if (it >= state->history.size()) return not_found("iteration");
  const auto& data = *state->data;
  const auto labels = harden(state->history.entries[it].assignment).labels;
  const std::size_t dims = std::min<std::size_t>(2, data.d());
  json points = json::array();
  for (std::size_t i = 0; i < data.n(); ++i) {
    json coords = json::array();
    for (std::size_t j = 0; j < dims; ++j) coords.push_back(data.values(i, j));
    json p{{"id", data.ids[i]}, {"coords", std::move(coords)}, {"label", labels[i]}};
    if (data.labels) p["truth"] = (*data.labels)[i];
    points.push_back(std::move(p));
  }
  return {200, json{{"session_id", id}, {"iteration", it}, {"points", std::move(points)}}};
}

namespace {

void send(httplib::Response& res, const Reply& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<std::size_t> parse_index(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool flag(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return false;
  const auto v = req.get_param_value(name);
  return v.empty() || v == "1" || v == "true" || v == "yes";
}

}  // namespace

void SessionService::mount(httplib::Server& server) {
  // SO_REUSEADDR only: httplib's default also sets SO_REUSEPORT, which would
  // let a second instance share a port that is already being served.
  server.set_socket_options([](auto sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });
  server.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/datasets", [this](const httplib::Request& req, httplib::Response& res) {
    CsvOptions opts;
    try {
      if (req.has_param("header")) opts.header = header_from(req.get_param_value("header"));
    } catch (const Error& e) {
      return send(res, error_reply(400, e.what()));
    }
    if (req.has_param("label_column")) opts.label_column = req.get_param_value("label_column");
    send(res, upload_dataset(req.body, opts));
  });
  server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, create_session(req.body));
  });
  server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, get_session(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/reject)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, reject_session(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/accept)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, accept_session(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/history)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, get_history(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/clusterings/([^/]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               const auto t = parse_index(req.matches[2]);
               if (!t) return send(res, not_found("iteration"));
               MemberOrder order = MemberOrder::responsibility;
               if (req.has_param("order")) {
                 const auto o = req.get_param_value("order");
                 if (o == "density")
                   order = MemberOrder::density;
                 else if (o != "responsibility")
                   return send(res, error_reply(400, "order must be responsibility or density"));
               }
               send(res, get_clustering(req.matches[1], *t, flag(req, "soft"), order));
             });
  server.Get(R"(/sessions/([^/]+)/points)", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::size_t> t;
    if (req.has_param("t")) {
      t = parse_index(req.get_param_value("t"));
      if (!t) return send(res, error_reply(400, "t must be a non-negative integer"));
    }
    send(res, get_points(req.matches[1], t));
  });
}

}  // namespace tinder
