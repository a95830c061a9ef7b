#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "objrec/categories.hpp"
#include "objrec/dataset.hpp"
#include "objrec/experiment.hpp"
#include "objrec/trials.hpp"

namespace objrec::service {

// Data directory layout:
//   pool/manifest.csv   preprocessed stimulus pool
//   stimuli/            rendered stimuli and masks, served under /stimuli/
//   sessions/<id>.json  creation parameters, enough to replan the schedule
//   logs/<id>.csv       append-only trial log in the native schema
inline constexpr const char* kDataDirEnv = "OBJREC_DATA_DIR";

struct Timing {
  int fixation_ms = 300;
  int stimulus_ms = 200;
  int mask_ms = 200;
  int response_ms = 1500;
  int total_ms() const noexcept { return fixation_ms + stimulus_ms + mask_ms + response_ms; }
};

inline constexpr double kBackgroundGray = 0.454;
inline constexpr int kDefaultPracticeTrials = 32;

struct SessionConfig {
  ExperimentKind experiment = ExperimentKind::Colour;
  Timing timing;
  double background = kBackgroundGray;
  std::vector<std::string> category_order;  ///< response-screen order, 4x4 row-major
  int practice_trials = kDefaultPracticeTrials;
  int main_trials = 0;
  int break_every = 256;
};

struct CreateRequest {
  std::string observer;
  ExperimentKind experiment = ExperimentKind::Colour;
  std::uint64_t seed = 0;
  int session = 0;  ///< 0-based; eidolon has three
  int practice_trials = kDefaultPracticeTrials;
  int images_per_category = kImagesPerCategory;
};

struct CreatedSession {
  std::string id;
  SessionConfig config;
};

enum class SessionState { Practice, Running, Break, Finished };
std::string_view state_name(SessionState s) noexcept;

struct BreakInfo {
  int block = 0;  ///< 1-based number of the block just completed
  int block_trials = 0;
  double last_block_accuracy = 0.0;
};

struct NextTrial {
  bool finished = false;
  int trial_index = 0;
  std::string stimulus_url;
  std::string mask_url;
  bool is_practice = false;
  std::optional<BreakInfo> break_info;
};

struct Submission {
  int trial_index = 0;
  Response response;  ///< nullopt = no click in the response window
  std::optional<double> rt_ms;
  std::optional<double> onset_ms;
  std::optional<double> click_ms;
};

struct Ack {
  int cursor = 0;                         ///< next expected trial index
  std::optional<Category> true_category;  ///< practice trials only
};

/// Session bookkeeping behind the HTTP API. Thread-safe; operations on one
/// session are serialized.
class SessionService {
 public:
  /// Loads data_dir/pool/manifest.csv and recovers every session whose
  /// metadata is present by replaying its log.
  explicit SessionService(std::filesystem::path data_dir);
  SessionService(std::filesystem::path data_dir, StimulusPool pool);
  ~SessionService();

  /// Plans the schedule and renders its stimuli. Throws Error(Conflict) when
  /// the observer already has an unfinished session.
  CreatedSession create_session(const CreateRequest& request);

  /// Trial at the cursor (idempotent until it is answered).
  NextTrial next_trial(const std::string& id);

  /// Throws Error(StaleTrial) when trial_index is not the cursor; the log is
  /// left unchanged.
  Ack submit_response(const std::string& id, const Submission& submission);

  int cursor(const std::string& id) const;
  SessionState state(const std::string& id) const;
  SessionConfig config(const std::string& id) const;
  std::vector<TrialRecord> records(const std::string& id) const;
  std::vector<std::string> session_ids() const;

  /// Absolute path of a servable file, or nullopt for unknown or unsafe names.
  std::optional<std::filesystem::path> stimulus_file(std::string_view name) const;

  const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

 private:
  struct Session;

  Session& find(const std::string& id) const;
  void recover();
  std::unique_ptr<Session> open_session(const CreateRequest& request, const std::string& id,
                                        bool render);

  std::filesystem::path data_dir_;
  StimulusPool pool_;
  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
};

/// HTTP+JSON front end:
///   POST /sessions                  {"observer","experiment","seed"[,"session","practice_trials","images_per_category"]}
///   GET  /sessions/{id}/trials/next
///   POST /sessions/{id}/responses   {"trial_index","response"[,"rt_ms","onset_ms","click_ms"]}
///   GET  /stimuli/{name}
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace objrec::service
