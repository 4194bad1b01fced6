#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tinder/data_io.hpp"
#include "tinder/matrix.hpp"
#include "tinder/optimizer.hpp"

namespace tinder {

// One clustering shown to the analyst.
struct HistoryEntry {
  std::size_t iteration = 0;
  std::uint64_t fit_seed = 0;
  double beta = 0.0;
  MixtureParams params;
  SoftAssignment assignment;  // frozen at fit time
  double objective = 0.0;
  double log_likelihood = 0.0;
  double penalty_value = 0.0;
  // Largest hardened ARS against any earlier entry; 0 for iteration 0.
  double max_ars_to_previous = 0.0;
  // max_ars_to_previous <= the session's novelty ceiling. Reported only.
  bool novel = true;
  // Runtime only; not persisted and ignored by ==.
  double wall_time_seconds = 0.0;

  bool operator==(const HistoryEntry& o) const;
};

struct FeedbackHistory {
  std::vector<HistoryEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
  // Frozen assignments of the first `count` entries.
  std::vector<SoftAssignment> assignments(std::size_t count) const;

  bool operator==(const FeedbackHistory&) const = default;
};

enum class SessionStatus { active, accepted };

std::string_view to_string(SessionStatus s);

// Where the session's data came from. An empty path means the data only
// exists in memory (tests, generated scenarios).
struct DatasetRef {
  std::string path;
  std::string sha256;
  HeaderMode header = HeaderMode::detect;
  std::optional<std::string> label_column;

  bool operator==(const DatasetRef&) const = default;
};

struct SessionState {
  std::string session_id;
  DatasetRef dataset;
  std::shared_ptr<const DataMatrix> data;
  FitConfig config;
  double novelty_ceiling = 0.3;
  bool store_soft = false;
  FeedbackHistory history;
  SessionStatus status = SessionStatus::active;

  std::size_t iteration() const noexcept { return history.size() - 1; }
  const HistoryEntry& latest() const { return history.entries.back(); }

  bool operator==(const SessionState& o) const;
};

struct SessionOptions {
  std::string session_id;
  DatasetRef dataset;
  double novelty_ceiling = 0.3;
  bool store_soft = false;
};

// Iteration 0: the unpenalized fit.
SessionState start_session(std::shared_ptr<const DataMatrix> data, const FitConfig& config,
                           SessionOptions options = {});

// Fits the next clustering against every entry shown so far.
SessionState reject(const SessionState& state);

SessionState accept(const SessionState& state);

// Fixed policy: the value. Auto: |LL(theta_0)| / (t log K), t = history length.
double resolve_beta(const SessionState& state);

struct DiversityReport {
  Matrix ars;  // T x T
  Matrix nmi;  // T x T
  // Max off-diagonal ARS per entry (the closest clustering in the set);
  // empty optional for a single-entry history.
  std::vector<std::optional<double>> closest_ars;
  // ARS against the previous entry; empty for entry 0.
  std::vector<std::optional<double>> ars_to_previous;
  std::optional<std::vector<double>> purity;
};

DiversityReport diversity_report(const SessionState& state);

ClusteringExport export_entry(const SessionState& state, std::size_t iteration);

// Persistence. With store_soft unset, assignments are written as hardened
// labels and recomputed from the stored parameters on load (then checked
// against the labels).
nlohmann::json session_to_json(const SessionState& state);
SessionState session_from_json(const nlohmann::json& j, std::shared_ptr<const DataMatrix> data);

void save_session(const SessionState& state, const std::filesystem::path& path);
// Reloads the dataset from the stored path and verifies its hash.
SessionState load_session(const std::filesystem::path& path);

// Loads a dataset file and fills the matching DatasetRef.
std::shared_ptr<const DataMatrix> load_dataset(const std::filesystem::path& path,
                                               const CsvOptions& options, DatasetRef& ref);

}  // namespace tinder
