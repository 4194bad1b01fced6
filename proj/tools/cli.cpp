#include "cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <signal.h>

#include <atomic>
#include <filesystem>
#include <iostream>
#include <thread>

#include "tinder/compare.hpp"
#include "tinder/data_io.hpp"
#include "tinder/errors.hpp"
#include "tinder/json_io.hpp"
#include "tinder/service.hpp"
#include "tinder/session.hpp"

namespace tinder::cli {

namespace fs = std::filesystem;

namespace {

struct DataFlags {
  std::string path;
  std::string header = "detect";
  std::string label_column;
};

struct FitFlags {
  std::size_t k = 0;
  std::string beta = "1";
  std::uint64_t seed = 0;
  std::size_t restarts = 8;
  std::size_t max_steps = 500;
  std::string covariance = "diagonal";
};

void add_data_flags(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--data", d.path, "CSV file")->required();
  cmd->add_option("--header", d.header, "present, absent or detect")
      ->check(CLI::IsMember({"present", "absent", "detect"}));
  cmd->add_option("--label-column", d.label_column, "ground-truth column (name or 0-based index)");
}

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--k", f.k, "number of clusters")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--beta", f.beta, "penalty weight or 'auto'")->check(CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          BetaPolicy::parse(s);
          return {};
        } catch (const Error& e) {
          return e.what();
        }
      },
      "BETA"));
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--restarts", f.restarts, "restarts per fit")->check(CLI::PositiveNumber);
  cmd->add_option("--max-steps", f.max_steps, "ascent steps per restart")->check(CLI::PositiveNumber);
  cmd->add_option("--covariance", f.covariance, "diagonal or spherical")
      ->check(CLI::IsMember({"diagonal", "spherical"}));
}

CsvOptions csv_options(const DataFlags& d) {
  CsvOptions o;
  o.header = d.header == "present" ? HeaderMode::present
             : d.header == "absent" ? HeaderMode::absent
                                    : HeaderMode::detect;
  if (!d.label_column.empty()) o.label_column = d.label_column;
  return o;
}

FitConfig fit_config(const FitFlags& f) {
  FitConfig c;
  c.k = f.k;
  c.beta = BetaPolicy::parse(f.beta);
  c.seed = f.seed;
  c.restarts = f.restarts;
  c.max_steps = f.max_steps;
  c.covariance_mode = covariance_mode_from_string(f.covariance);
  c.validate();
  return c;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

fs::path clustering_path(const fs::path& dir, std::size_t t, ExportFormat format) {
  return dir / ("clustering_" + std::to_string(t) + (format == ExportFormat::csv ? ".csv" : ".json"));
}

void print_entry(std::ostream& out, const HistoryEntry& e) {
  out << "iteration " << e.iteration << ": beta=" << fmt(e.beta) << " log_likelihood=" << fmt(e.log_likelihood)
      << " penalty=" << fmt(e.penalty_value) << " objective=" << fmt(e.objective);
  if (e.iteration > 0) out << " max_ars_to_previous=" << fmt(e.max_ars_to_previous) << (e.novel ? "" : " (not novel)");
  out << "\n";
}

// Reproducible id for CLI sessions: the same data and config always give the
// same file contents.
std::string derived_session_id(const DatasetRef& ref, const FitConfig& config) {
  nlohmann::json j = config;
  return "s-" + content_hash(ref.sha256 + j.dump()).substr(0, 16);
}

int cmd_generate(const std::string& scenario, std::uint64_t seed, double separation, const std::string& out_path,
                 std::ostream& out) {
  const auto spec = scenario == "four" ? four_blob_scenario(seed) : ten_blob_scenario(seed, separation);
  const auto data = generate_blobs(spec);
  write_file(out_path, data_to_csv(data));
  out << "wrote " << data.n() << " x " << data.d() << " to " << out_path << "\n";
  return 0;
}

struct ExportFlags {
  std::string format = "csv";
  bool soft = false;
};

int cmd_fit(const DataFlags& d, const FitFlags& f, const std::string& out_dir, const ExportFlags& x,
            bool store_soft, std::ostream& out) {
  const auto config = fit_config(f);
  SessionOptions opts;
  const auto data = load_dataset(d.path, csv_options(d), opts.dataset);
  opts.session_id = derived_session_id(opts.dataset, config);
  opts.store_soft = store_soft;
  const auto state = start_session(data, config, opts);
  const fs::path dir = out_dir;
  const auto format = export_format_from_string(x.format);
  save_session(state, dir / "session.json");
  export_clustering(export_entry(state, 0), clustering_path(dir, 0, format), format, x.soft);
  print_entry(out, state.latest());
  out << "session " << state.session_id << " saved to " << (dir / "session.json").string() << "\n";
  return 0;
}

int cmd_reject(const std::string& session_file, std::size_t times, const ExportFlags& x, std::ostream& out) {
  auto state = load_session(session_file);
  const auto dir = fs::path(session_file).parent_path();
  const auto format = export_format_from_string(x.format);
  if (times > 0 && state.status != SessionStatus::active)
    throw IllegalState("session " + state.session_id + " is already accepted");
  for (std::size_t i = 0; i < times; ++i) {
    state = reject(state);
    save_session(state, session_file);
    export_clustering(export_entry(state, state.iteration()), clustering_path(dir, state.iteration(), format),
                      format, x.soft);
    print_entry(out, state.latest());
  }
  out << "history length " << state.history.size() << "\n";
  return 0;
}

int cmd_accept(const std::string& session_file, std::ostream& out) {
  auto state = accept(load_session(session_file));
  save_session(state, session_file);
  out << "session " << state.session_id << " accepted at iteration " << state.iteration() << "\n";
  return 0;
}

int cmd_export(const std::string& session_file, std::optional<std::size_t> iteration, const ExportFlags& x,
               const std::string& out_path, std::ostream& out) {
  const auto state = load_session(session_file);
  const std::size_t t = iteration.value_or(state.iteration());
  if (t >= state.history.size()) throw InvalidConfig("session has no iteration " + std::to_string(t));
  export_clustering(export_entry(state, t), out_path, export_format_from_string(x.format), x.soft);
  out << "exported iteration " << t << " to " << out_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& session_file, const std::string& out_path, std::ostream& out) {
  const auto state = load_session(session_file);
  const auto r = diversity_report(state);
  std::string csv = "a,b,ars,nmi\n";
  for (std::size_t a = 0; a < r.ars.rows(); ++a)
    for (std::size_t b = 0; b < r.ars.cols(); ++b)
      csv += std::to_string(a) + "," + std::to_string(b) + "," + format_double(r.ars(a, b)) + "," +
             format_double(r.nmi(a, b)) + "\n";
  for (std::size_t t = 0; t < r.ars.rows(); ++t) {
    out << "iteration " << t;
    if (r.purity) out << " purity=" << fmt((*r.purity)[t]);
    if (r.closest_ars[t]) out << " closest_ars=" << fmt(*r.closest_ars[t]);
    if (r.ars_to_previous[t]) out << " ars_to_previous=" << fmt(*r.ars_to_previous[t]);
    out << "\n";
  }
  if (!out_path.empty()) write_file(out_path, csv);
  return 0;
}

int cmd_compare(const DataFlags& d, const FitFlags& f, std::size_t iterations, const std::string& out_path,
                std::ostream& out) {
  const auto config = fit_config(f);
  DatasetRef ref;
  const auto data = load_dataset(d.path, csv_options(d), ref);
  const auto c = compare_methods(*data, config, iterations);
  write_file(out_path, comparison_csv(c, config));
  auto line = [&](const char* name, const MethodSummary& m) {
    out << name << ": max_pairwise_ars=" << fmt(m.max_pairwise_ars) << " mean_pairwise_ars=" << fmt(m.mean_pairwise_ars);
    if (m.mean_purity) out << " mean_purity=" << fmt(*m.mean_purity);
    out << "\n";
  };
  line("tinder", c.tinder);
  line("baseline", c.baseline);
  out << "report written to " << out_path << "\n";
  return 0;
}

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 8787;
  std::string data_dir = "tinder-data";
  std::string cors_origin = "*";
  std::size_t restarts = 8;
};

int cmd_serve(const ServeFlags& s, std::ostream& out, std::ostream& err) {
  // Block termination signals before the server spawns workers so that only
  // the watcher below ever receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceOptions opts;
  opts.data_dir = s.data_dir;
  opts.cors_origin = s.cors_origin;
  opts.restarts = s.restarts;
  SessionService service(opts);
  service.restore();

  httplib::Server server;
  service.mount(server);
  int port = s.port;
  if (port == 0) {
    port = server.bind_to_any_port(s.host);
    if (port < 0) {
      err << "error: cannot bind " << s.host << "\n";
      return 1;
    }
  } else if (!server.bind_to_port(s.host, port)) {
    err << "error: cannot bind " << s.host << ":" << port << " (in use?)\n";
    return 1;
  }
  out << "listening on http://" << s.host << ":" << port << std::endl;

  std::atomic<bool> done{false};
  std::thread watcher([&] {
    const timespec tick{0, 200'000'000};
    while (!done) {
      if (sigtimedwait(&signals, nullptr, &tick) > 0) {
        server.stop();
        return;
      }
    }
  });
  server.listen_after_bind();
  done = true;
  watcher.join();
  service.persist_all();
  out << "persisted " << service.session_count() << " session(s)" << std::endl;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Alternative clusterings by rejecting what you have seen", "tinder"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  app.failure_message(CLI::FailureMessage::help);

  std::string scenario = "four", gen_out;
  std::uint64_t gen_seed = 0;
  double separation = 8.0;
  auto* generate = app.add_subcommand("generate", "write a synthetic blob dataset as CSV");
  generate->add_option("--scenario", scenario, "four (2-D) or ten (10-D)")->check(CLI::IsMember({"four", "ten"}));
  generate->add_option("--seed", gen_seed, "generator seed");
  generate->add_option("--separation", separation, "center distance for the ten-blob scenario")
      ->check(CLI::PositiveNumber);
  generate->add_option("--out", gen_out, "output CSV")->required();

  DataFlags data_flags;
  FitFlags fit_flags;
  ExportFlags export_flags;
  std::string out_dir = ".";
  bool store_soft = false;
  auto* fit = app.add_subcommand("fit", "start a session: fit iteration 0 and save it");
  add_data_flags(fit, data_flags);
  add_fit_flags(fit, fit_flags);
  fit->add_option("--out", out_dir, "output directory");
  fit->add_option("--format", export_flags.format, "clustering export format")->check(CLI::IsMember({"csv", "json"}));
  fit->add_flag("--soft", export_flags.soft, "include responsibilities in exports");
  fit->add_flag("--store-soft", store_soft, "store full responsibilities in the session file");

  std::string session_file;
  std::size_t times = 1;
  auto* rej = app.add_subcommand("reject", "reject the latest clustering and fit the next one");
  rej->add_option("--session", session_file, "session JSON")->required();
  rej->add_option("--times", times, "number of rejections")->check(CLI::NonNegativeNumber);
  rej->add_option("--format", export_flags.format, "clustering export format")->check(CLI::IsMember({"csv", "json"}));
  rej->add_flag("--soft", export_flags.soft, "include responsibilities in exports");

  auto* acc = app.add_subcommand("accept", "accept the latest clustering");
  acc->add_option("--session", session_file, "session JSON")->required();

  std::optional<std::size_t> iteration;
  std::string out_path;
  auto* exp = app.add_subcommand("export", "export one clustering of a session");
  exp->add_option("--session", session_file, "session JSON")->required();
  exp->add_option("--iteration", iteration, "iteration (default: latest)");
  exp->add_option("--format", export_flags.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  exp->add_flag("--soft", export_flags.soft, "include responsibilities");
  exp->add_option("--out", out_path, "output file")->required();

  std::string eval_out;
  auto* eval = app.add_subcommand("evaluate", "pairwise ARS/NMI and purity over a session's history");
  eval->add_option("--session", session_file, "session JSON")->required();
  eval->add_option("--out", eval_out, "optional CSV of the pairwise matrices");

  std::size_t iterations = 5;
  std::string report = "compare.csv";
  auto* cmp = app.add_subcommand("compare", "TINDER iterations against seed-matched random restarts");
  add_data_flags(cmp, data_flags);
  add_fit_flags(cmp, fit_flags);
  cmp->add_option("--iterations", iterations, "clusterings per method")->check(CLI::Range(2, 1000));
  cmp->add_option("--out", report, "report CSV");

  ServeFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "run the HTTP session service");
  serve->add_option("--host", serve_flags.host, "bind address");
  serve->add_option("--port", serve_flags.port, "port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--data-dir", serve_flags.data_dir, "datasets and sessions directory");
  serve->add_option("--cors-origin", serve_flags.cors_origin, "Access-Control-Allow-Origin value");
  serve->add_option("--restarts", serve_flags.restarts, "default restarts per fit")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) return cmd_generate(scenario, gen_seed, separation, gen_out, out);
    if (*fit) return cmd_fit(data_flags, fit_flags, out_dir, export_flags, store_soft, out);
    if (*rej) return cmd_reject(session_file, times, export_flags, out);
    if (*acc) return cmd_accept(session_file, out);
    if (*exp) return cmd_export(session_file, iteration, export_flags, out_path, out);
    if (*eval) return cmd_evaluate(session_file, eval_out, out);
    if (*cmp) return cmd_compare(data_flags, fit_flags, iterations, report, out);
    if (*serve) return cmd_serve(serve_flags, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tinder::cli
