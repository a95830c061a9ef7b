#include "objrec/service.hpp"

#include <chrono>
#include <cstdio>

#include "httplib.h"
#include "json.hpp"
#include "objrec/codec.hpp"
#include "objrec/degrade.hpp"
#include "objrec/error.hpp"
#include "objrec/rng.hpp"
#include "objrec/util.hpp"

namespace objrec::service {

using nlohmann::json;

std::string_view state_name(SessionState s) noexcept {
  switch (s) {
    case SessionState::Practice: return "practice";
    case SessionState::Running: return "running";
    case SessionState::Break: return "break";
    case SessionState::Finished: return "finished";
  }
  return "";
}

struct SessionService::Session {
  std::string id;
  CreateRequest request;
  TrialSchedule schedule;
  SessionConfig config;
  std::vector<TrialRecord> records;
  std::filesystem::path log_path;
  std::ofstream log;
  std::mutex mutex;

  int cursor() const noexcept { return static_cast<int>(records.size()); }
  bool finished() const noexcept { return records.size() >= schedule.trials.size(); }

  SessionState state() const noexcept {
    if (finished()) return SessionState::Finished;
    const auto c = records.size();
    if (schedule.trials[c].is_practice) return SessionState::Practice;
    if (c > 0 && schedule.trials[c - 1].break_after) return SessionState::Break;
    return SessionState::Running;
  }
};

namespace {

std::string hex_id(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string session_id(const CreateRequest& r) {
  return hex_id(derive_seed(r.seed, r.observer + "/" + std::string(experiment_name(r.experiment)) +
                                        "/" + std::to_string(r.session)));
}

json request_json(const CreateRequest& r) {
  return {{"observer", r.observer},
          {"experiment", std::string(experiment_name(r.experiment))},
          {"seed", r.seed},
          {"session", r.session},
          {"practice_trials", r.practice_trials},
          {"images_per_category", r.images_per_category}};
}

CreateRequest request_from_json(const json& j) {
  CreateRequest r;
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "session request must be an object");
  if (!j.contains("observer") || !j["observer"].is_string() ||
      j["observer"].get<std::string>().empty()) {
    throw Error(ErrorKind::InvalidInput, "session request needs an observer code");
  }
  r.observer = j["observer"].get<std::string>();
  const auto kind = parse_experiment(j.value("experiment", std::string{}));
  if (!kind) throw Error(ErrorKind::InvalidInput, "unknown experiment");
  r.experiment = *kind;
  r.seed = j.value("seed", std::uint64_t{0});
  r.session = j.value("session", 0);
  r.practice_trials = j.value("practice_trials", kDefaultPracticeTrials);
  r.images_per_category = j.value("images_per_category", kImagesPerCategory);
  if (r.practice_trials < 0 || r.images_per_category < 1) {
    throw Error(ErrorKind::InvalidParameter, "practice_trials and images_per_category out of range");
  }
  return r;
}

double now_ms() {
  using namespace std::chrono;
  return static_cast<double>(
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

std::uint64_t mask_seed(const TrialSchedule& schedule, int trial_index) {
  return derive_seed(derive_seed(schedule.seed, "mask/" + std::to_string(schedule.session)),
                     static_cast<std::uint64_t>(trial_index));
}

std::string mask_name(const TrialSchedule& schedule, int trial_index) {
  return "mask_" + hex_id(mask_seed(schedule, trial_index)) + ".png";
}

}  // namespace

SessionService::SessionService(std::filesystem::path data_dir)
    : SessionService(data_dir, read_manifest(data_dir / "pool" / "manifest.csv")) {}

SessionService::SessionService(std::filesystem::path data_dir, StimulusPool pool)
    : data_dir_(std::move(data_dir)), pool_(std::move(pool)) {
  std::filesystem::create_directories(data_dir_ / "stimuli");
  std::filesystem::create_directories(data_dir_ / "sessions");
  std::filesystem::create_directories(data_dir_ / "logs");
  recover();
}

SessionService::~SessionService() = default;

std::unique_ptr<SessionService::Session> SessionService::open_session(const CreateRequest& request,
                                                                      const std::string& id,
                                                                      bool render) {
  auto s = std::make_unique<Session>();
  s->id = id;
  s->request = request;
  PlanOptions plan;
  plan.images_per_category = request.images_per_category;
  plan.practice_trials = request.practice_trials;
  s->schedule = plan_session(pool_, request.experiment, request.seed, request.session, plan);
  s->config.experiment = request.experiment;
  for (Category c : kAllCategories) s->config.category_order.emplace_back(category_name(c));
  s->config.practice_trials = s->schedule.practice_count();
  s->config.main_trials = s->schedule.main_count();
  s->config.break_every = s->schedule.break_every;
  s->log_path = data_dir_ / "logs" / (id + ".csv");
  if (render) render_stimuli(pool_, s->schedule, data_dir_ / "stimuli");
  return s;
}

void SessionService::recover() {
  std::vector<std::filesystem::path> metas;
  for (const auto& e : std::filesystem::directory_iterator(data_dir_ / "sessions")) {
    if (e.path().extension() == ".json") metas.push_back(e.path());
  }
  std::sort(metas.begin(), metas.end());
  for (const auto& meta : metas) {
    const auto request = request_from_json(json::parse(read_text_file(meta)));
    const std::string id = meta.stem().string();
    auto s = open_session(request, id, false);
    if (std::filesystem::exists(s->log_path)) {
      std::string text = read_text_file(s->log_path);
      const auto nl = text.rfind('\n');
      const std::size_t complete = nl == std::string::npos ? 0 : nl + 1;
      if (complete != text.size()) {  // a crash mid-write left a torn final row
        text.resize(complete);
        std::filesystem::resize_file(s->log_path, complete);
      }
      if (!trim(text).empty()) {
        s->records = parse_trials_csv(text, request.experiment, s->log_path.string());
      }
      if (s->records.size() > s->schedule.trials.size()) {
        throw Error(ErrorKind::Conflict, s->log_path.string() + " is longer than its schedule");
      }
      for (std::size_t i = 0; i < s->records.size(); ++i) {
        const auto& r = s->records[i];
        const auto& t = s->schedule.trials[i];
        if (r.trial != t.index || r.image_id != t.image_id ||
            r.condition != t.condition.condition()) {
          throw Error(ErrorKind::Conflict, s->log_path.string() + ": row " +
                                               std::to_string(i + 1) + " does not match the schedule");
        }
      }
      if (complete == 0) write_text_file(s->log_path, std::string(kTrialLogHeader) + "\n");
    } else {
      write_text_file(s->log_path, std::string(kTrialLogHeader) + "\n");
    }
    s->log.open(s->log_path, std::ios::app | std::ios::binary);
    sessions_.emplace(id, std::move(s));
  }
}

CreatedSession SessionService::create_session(const CreateRequest& request) {
  if (request.observer.empty()) throw Error(ErrorKind::InvalidInput, "observer code is empty");
  const std::string id = session_id(request);
  {
    std::lock_guard lock(mutex_);
    for (const auto& [other_id, s] : sessions_) {
      std::lock_guard slock(s->mutex);
      if (s->request.observer == request.observer && !s->finished()) {
        throw Error(ErrorKind::Conflict,
                    "observer '" + request.observer + "' already has active session " + other_id);
      }
      if (other_id == id) {
        throw Error(ErrorKind::Conflict, "session " + id + " already exists");
      }
    }
  }
  auto s = open_session(request, id, true);
  std::lock_guard lock(mutex_);
  for (const auto& [other_id, other] : sessions_) {
    std::lock_guard slock(other->mutex);
    if (other_id == id || (other->request.observer == request.observer && !other->finished())) {
      throw Error(ErrorKind::Conflict,
                  "observer '" + request.observer + "' already has active session " + other_id);
    }
  }
  write_text_file(data_dir_ / "sessions" / (id + ".json"), request_json(request).dump(2) + "\n");
  write_text_file(s->log_path, std::string(kTrialLogHeader) + "\n");
  s->log.open(s->log_path, std::ios::app | std::ios::binary);
  CreatedSession out{id, s->config};
  sessions_.emplace(id, std::move(s));
  return out;
}

SessionService::Session& SessionService::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::NotFound, "unknown session " + id);
  return *it->second;
}

NextTrial SessionService::next_trial(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  NextTrial out;
  if (s.finished()) {
    out.finished = true;
    out.trial_index = s.cursor();
    return out;
  }
  const Trial& t = s.schedule.trials[static_cast<std::size_t>(s.cursor())];
  out.trial_index = t.index;
  out.is_practice = t.is_practice;
  out.stimulus_url = "/stimuli/" + stimulus_filename(t.image_id, t.condition);
  const std::string mask = mask_name(s.schedule, t.index);
  const auto mask_path = data_dir_ / "stimuli" / mask;
  if (!std::filesystem::exists(mask_path)) {
    save_image(mask_path, pink_noise_mask(256, 256, mask_seed(s.schedule, t.index)));
  }
  out.mask_url = "/stimuli/" + mask;

  if (s.state() == SessionState::Break) {
    BreakInfo info;
    int main_done = 0;
    for (const auto& r : s.records) main_done += r.is_practice ? 0 : 1;
    info.block = main_done / s.schedule.break_every;
    int correct = 0;
    int seen = 0;
    for (auto it = s.records.rbegin(); it != s.records.rend() && seen < s.schedule.break_every;
         ++it) {
      if (it->is_practice) break;
      ++seen;
      correct += it->correct() ? 1 : 0;
    }
    info.block_trials = seen;
    info.last_block_accuracy = seen ? static_cast<double>(correct) / seen : 0.0;
    out.break_info = info;
  }
  return out;
}

Ack SessionService::submit_response(const std::string& id, const Submission& submission) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  if (submission.trial_index != s.cursor() || s.finished()) {
    throw Error(ErrorKind::StaleTrial, "trial " + std::to_string(submission.trial_index) +
                                           " rejected; current cursor is " +
                                           std::to_string(s.cursor()));
  }
  const Trial& t = s.schedule.trials[static_cast<std::size_t>(s.cursor())];
  TrialRecord r;
  r.observer = s.request.observer;
  r.session = s.schedule.session + 1;
  r.run = 0;
  r.trial = t.index;
  r.image_id = t.image_id;
  r.category = t.category;
  r.condition = t.condition.condition();
  r.response = submission.response;
  r.rt_ms = submission.rt_ms;
  r.is_practice = t.is_practice;
  r.onset_ms = submission.onset_ms;
  r.click_ms = submission.click_ms;
  r.received_ms = now_ms();

  const std::string row = trial_to_csv(r) + "\n";
  s.log.write(row.data(), static_cast<std::streamsize>(row.size()));
  s.log.flush();
  if (!s.log) throw Error(ErrorKind::Io, "cannot append to " + s.log_path.string());
  s.records.push_back(std::move(r));

  Ack ack;
  ack.cursor = s.cursor();
  if (t.is_practice) ack.true_category = t.category;
  return ack;
}

int SessionService::cursor(const std::string& id) const {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  return s.cursor();
}

SessionState SessionService::state(const std::string& id) const {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  return s.state();
}

SessionConfig SessionService::config(const std::string& id) const {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  return s.config;
}

std::vector<TrialRecord> SessionService::records(const std::string& id) const {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  return s.records;
}

std::vector<std::string> SessionService::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

std::optional<std::filesystem::path> SessionService::stimulus_file(std::string_view name) const {
  if (name.empty() || name.find('/') != std::string_view::npos ||
      name.find('\\') != std::string_view::npos || name.find("..") != std::string_view::npos) {
    return std::nullopt;
  }
  auto path = data_dir_ / "stimuli" / std::string(name);
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  return path;
}

// -- HTTP ---------------------------------------------------------------------

namespace {

json config_json(const SessionConfig& c) {
  return {{"experiment", std::string(experiment_name(c.experiment))},
          {"timing",
           {{"fixation_ms", c.timing.fixation_ms},
            {"stimulus_ms", c.timing.stimulus_ms},
            {"mask_ms", c.timing.mask_ms},
            {"response_ms", c.timing.response_ms},
            {"total_ms", c.timing.total_ms()}}},
          {"background", c.background},
          {"category_order", c.category_order},
          {"practice_trials", c.practice_trials},
          {"main_trials", c.main_trials},
          {"total_trials", c.practice_trials + c.main_trials},
          {"break_every", c.break_every}};
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict:
    case ErrorKind::StaleTrial: return 409;
    case ErrorKind::InvalidInput:
    case ErrorKind::InvalidParameter:
    case ErrorKind::Ingestion:
    case ErrorKind::Capacity: return 400;
    default: return 500;
  }
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw Error(ErrorKind::InvalidInput, std::string(key) + " must be a number");
  return j[key].get<double>();
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

struct HttpServer::Impl {
  SessionService& service;
  httplib::Server server;

  explicit Impl(SessionService& s) : service(s) {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const auto request = request_from_json(parse_body(req));
        const auto created = service.create_session(request);
        send_json(res, 201, {{"session_id", created.id}, {"config", config_json(created.config)}});
      });
    });

    server.Get(R"(/sessions/([0-9a-f]+)/trials/next)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 handle(res, [&] {
                   const auto next = service.next_trial(req.matches[1].str());
                   if (next.finished) {
                     send_json(res, 200, {{"finished", true}, {"trial_index", next.trial_index}});
                     return;
                   }
                   json body{{"finished", false},
                             {"trial_index", next.trial_index},
                             {"stimulus_url", next.stimulus_url},
                             {"mask_url", next.mask_url},
                             {"is_practice", next.is_practice},
                             {"break_info", nullptr}};
                   if (next.break_info) {
                     body["break_info"] = {
                         {"block", next.break_info->block},
                         {"block_trials", next.break_info->block_trials},
                         {"last_block_accuracy", next.break_info->last_block_accuracy}};
                   }
                   send_json(res, 200, body);
                 });
               });

    server.Post(R"(/sessions/([0-9a-f]+)/responses)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1].str();
                  handle(res, [&] {
                    const json j = parse_body(req);
                    if (!j.contains("trial_index") || !j["trial_index"].is_number_integer()) {
                      throw Error(ErrorKind::InvalidInput, "trial_index must be an integer");
                    }
                    Submission sub;
                    sub.trial_index = j["trial_index"].get<int>();
                    if (j.contains("response") && j["response"].is_string()) {
                      sub.response = parse_response(j["response"].get<std::string>());
                    } else if (j.contains("response") && !j["response"].is_null()) {
                      throw Error(ErrorKind::InvalidInput, "response must be a category name or \"na\"");
                    }
                    sub.rt_ms = optional_number(j, "rt_ms");
                    sub.onset_ms = optional_number(j, "onset_ms");
                    sub.click_ms = optional_number(j, "click_ms");
                    try {
                      const Ack ack = service.submit_response(id, sub);
                      json body{{"accepted", true}, {"cursor", ack.cursor}};
                      if (ack.true_category) {
                        body["true_category"] = std::string(category_name(*ack.true_category));
                      }
                      send_json(res, 200, body);
                    } catch (const Error& e) {
                      if (e.kind() != ErrorKind::StaleTrial) throw;
                      send_json(res, 409, {{"accepted", false},
                                           {"error", e.what()},
                                           {"cursor", service.cursor(id)}});
                    }
                  });
                });

    server.Get(R"(/stimuli/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto path = service.stimulus_file(req.matches[1].str());
      if (!path) {
        send_json(res, 404, {{"error", "no such stimulus"}});
        return;
      }
      const auto bytes = read_file(*path);
      const bool png = path->extension() == ".png";
      res.set_content(std::string(bytes.begin(), bytes.end()), png ? "image/png" : "image/jpeg");
    });
  }

  static json parse_body(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error&) {
      throw Error(ErrorKind::InvalidInput, "request body is not valid JSON");
    }
  }

  template <typename F>
  static void handle(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      send_json(res, http_status(e.kind()),
                {{"error", e.what()}, {"kind", std::string(error_kind_name(e.kind()))}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  }
};

HttpServer::HttpServer(SessionService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }

}  // namespace objrec::service
