#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "tinder/data_io.hpp"
#include "tinder/session.hpp"

namespace httplib {
class Server;
}

namespace tinder {

enum class MemberOrder { responsibility, density };

struct ClusterSummary {
  std::size_t index = 0;
  std::size_t size = 0;  // hardened count
  double weight = 0.0;
  std::vector<std::int64_t> top_members;
  std::vector<double> centroid;  // component mean
};

// Members ranked by p(h | x) (or by log p(x | h)), descending, ties by id.
std::vector<ClusterSummary> summarize_clusters(const DataMatrix& data, const MixtureParams& params,
                                               const SoftAssignment& assignment, std::size_t top,
                                               MemberOrder order = MemberOrder::responsibility);

void to_json(nlohmann::json& j, const ClusterSummary& s);

struct ServiceOptions {
  std::filesystem::path data_dir = "tinder-data";
  std::string cors_origin = "*";
  std::size_t top_members = 6;
  // Restart count for sessions that do not set one.
  std::size_t restarts = 8;
};

// HTTP status plus JSON body; the transport only copies these out.
struct Reply {
  int status = 200;
  nlohmann::json body;
};

// Dataset store and live sessions behind the JSON API. Every handler is
// callable without a socket; mount() wires them to an httplib server.
class SessionService {
 public:
  explicit SessionService(ServiceOptions options);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Reloads datasets and sessions persisted under data_dir.
  void restore();
  // Writes every session to disk.
  void persist_all();

  Reply upload_dataset(const std::string& body, const CsvOptions& options);
  Reply create_session(const std::string& body);
  Reply reject_session(const std::string& id);
  Reply accept_session(const std::string& id);
  Reply get_session(const std::string& id);
  Reply get_history(const std::string& id);
  Reply get_clustering(const std::string& id, std::size_t t, bool soft, MemberOrder order);
  Reply get_points(const std::string& id, std::optional<std::size_t> t);

  std::size_t session_count() const;

  void mount(httplib::Server& server);

 private:
  struct Dataset {
    std::string id;
    DatasetRef ref;
    std::shared_ptr<const DataMatrix> data;
  };

  struct Slot {
    std::mutex mutate;  // held for the whole of a reject/accept
    mutable std::mutex snapshot_mutex;
    std::shared_ptr<const SessionState> state;

    std::shared_ptr<const SessionState> snapshot() const;
    void publish(std::shared_ptr<const SessionState> next);
  };

  std::shared_ptr<Slot> find_slot(const std::string& id) const;
  std::shared_ptr<const Dataset> find_dataset(const std::string& id) const;
  void save(const SessionState& state) const;
  std::filesystem::path session_path(const std::string& id) const;
  nlohmann::json iteration_body(const SessionState& state, std::size_t t) const;
  // Runs f under the session's mutation lock; 409 when another mutation
  // holds it. On success the new state is saved, published and returned.
  template <class F>
  Reply mutate(const std::string& id, F&& f, std::shared_ptr<const SessionState>& published);

  ServiceOptions options_;
  mutable std::shared_mutex datasets_mutex_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace tinder
