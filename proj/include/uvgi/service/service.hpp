#pragma once

// Scene, profile and run management behind the HTTP facade.
//
// Scene mutations are serialized per scene id. Each execute launches a
// background worker; progress is kept as an append-only event log per run
// that any number of readers can follow.

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "uvgi/service/store.hpp"

namespace uvgi::service {

using nlohmann::json;

class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what, json detail = json::object())
      : std::runtime_error(what), status_(status), detail_(std::move(detail)) {}

  int status() const noexcept { return status_; }
  const json& detail() const noexcept { return detail_; }

 private:
  int status_;
  json detail_;
};

// One server-sent event.
struct RunEvent {
  std::string name;  // "progress" or "done"
  std::string data;  // single-line JSON
};

class DisinfectionService {
 public:
  explicit DisinfectionService(std::filesystem::path data_dir);
  ~DisinfectionService();

  DisinfectionService(const DisinfectionService&) = delete;
  DisinfectionService& operator=(const DisinfectionService&) = delete;

  // Measurement CSV -> fitted, persisted profile.
  json create_profile(std::string_view csv, int order, std::optional<double> cutoff_radius,
                      std::optional<double> calibration_height);
  json get_profile(const std::string& id) const;

  json create_scene(const json& body);
  json get_scene(const std::string& id) const;
  json list_scenes() const;
  json set_region(const std::string& id, const json& body);
  json set_params(const std::string& id, const json& body);
  json set_profile(const std::string& id, const json& body);
  json plan(const std::string& id);

  // Returns {"run_id": ...}; the run proceeds on a background worker.
  json execute(const std::string& id);

  json get_run(const std::string& id) const;
  // heatmap.json, report.json, sensors.csv, traces.csv or telemetry.jsonl of a finished run.
  std::string run_artifact(const std::string& id, const std::string& name) const;

  // Copies events [from, ...) into `out`, waiting up to `timeout` for new
  // ones. Returns false once the run is finished and everything was read.
  bool next_events(const std::string& run_id, std::size_t from, std::vector<RunEvent>& out,
                   std::chrono::milliseconds timeout) const;

  // Blocks until the run leaves pending/running (test and CLI helper).
  void wait_for_run(const std::string& run_id) const;

  const Store& store() const noexcept { return store_; }

 private:
  struct RunChannel {
    mutable std::mutex mutex;
    mutable std::condition_variable cv;
    std::vector<RunEvent> events;
    bool finished = false;
  };

  std::shared_ptr<std::mutex> scene_lock(const std::string& id);
  json load_scene(const std::string& id) const;
  std::shared_ptr<RunChannel> channel(const std::string& run_id) const;
  void run_worker(std::string run_id, json scene, json profile_doc, std::shared_ptr<RunChannel> channel);
  void recover_interrupted_runs();

  Store store_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> scene_locks_;
  std::map<std::string, std::shared_ptr<RunChannel>> channels_;
  std::set<std::string> active_scenes_;
  std::vector<std::thread> workers_;
};

}  // namespace uvgi::service
