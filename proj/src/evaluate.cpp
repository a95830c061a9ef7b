#include "objrec/evaluate.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"
#include "objrec/error.hpp"
#include "objrec/util.hpp"

namespace objrec {

using nlohmann::json;

Category classify_response(std::span<const double> probs, const CategoryMap& map) {
  if (probs.size() != kImageNetClasses) {
    throw Error(ErrorKind::InvalidInput, "expected 1000 class probabilities, got " +
                                             std::to_string(probs.size()));
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (std::isnan(probs[i]) || probs[i] < 0.0) {
      throw Error(ErrorKind::InvalidInput,
                  "invalid probability at class " + std::to_string(i));
    }
  }
  const auto& entries = map.entries();
  if (entries.empty()) throw Error(ErrorKind::InvalidInput, "category map has no entries");
  const CategoryMap::Entry* best = nullptr;
  for (const auto& e : entries) {
    if (e.index < 0 || static_cast<std::size_t>(e.index) >= probs.size()) continue;
    if (!best || probs[static_cast<std::size_t>(e.index)] > probs[static_cast<std::size_t>(best->index)]) {
      best = &e;
    }
  }
  if (!best) throw Error(ErrorKind::InvalidInput, "category map has no ImageNet class indices");
  return best->category;
}

// -- Protocol -----------------------------------------------------------------

std::string adapter_request(const std::filesystem::path& stimulus) {
  return json{{"stimulus", stimulus.string()}}.dump();
}

namespace {

Error protocol_error(const std::string& why, std::string_view line) {
  return Error(ErrorKind::Protocol, why + ": " + std::string(line));
}

AdapterReply reply_from_json(const json& j, std::string_view line) {
  if (!j.is_object()) throw protocol_error("adapter reply is not a JSON object", line);
  AdapterReply reply;
  if (auto it = j.find("probs"); it != j.end()) {
    if (!it->is_array()) throw protocol_error("\"probs\" is not an array", line);
    if (it->size() != kImageNetClasses) {
      throw protocol_error("expected 1000 probabilities, got " + std::to_string(it->size()), line);
    }
    std::vector<double> probs;
    probs.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number()) throw protocol_error("non-numeric probability", line);
      const double p = v.get<double>();
      if (std::isnan(p) || p < 0.0) throw protocol_error("negative or NaN probability", line);
      probs.push_back(p);
    }
    reply.probs = std::move(probs);
  } else if (auto it2 = j.find("category"); it2 != j.end()) {
    if (!it2->is_string()) throw protocol_error("\"category\" is not a string", line);
    const auto cat = parse_category(it2->get<std::string>());
    if (!cat) throw protocol_error("unknown category", line);
    reply.category = *cat;
  } else {
    throw protocol_error("adapter reply has neither \"probs\" nor \"category\"", line);
  }
  return reply;
}

}  // namespace

AdapterReply parse_adapter_reply(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw protocol_error("malformed adapter reply", line);
  }
  return reply_from_json(j, line);
}

Category resolve_reply(const AdapterReply& reply, const CategoryMap& map) {
  if (reply.category) return *reply.category;
  return classify_response(*reply.probs, map);
}

// -- ProcessAdapter --------------------------------------------------------------

ProcessAdapter::ProcessAdapter(std::vector<std::string> argv, const CategoryMap& map)
    : map_(map) {
  if (argv.empty()) throw Error(ErrorKind::InvalidParameter, "adapter command is empty");
  for (const auto& a : argv) command_ += (command_.empty() ? "" : " ") + a;
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) throw Error(ErrorKind::Io, "pipe: " + std::string(std::strerror(errno)));
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorKind::Io, "pipe: " + std::string(std::strerror(errno)));
  }
  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) throw Error(ErrorKind::Io, "fork: " + std::string(std::strerror(errno)));
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execvp(args[0], args.data());
    std::_Exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  to_child_ = ::fdopen(in_pipe[1], "w");
  from_child_ = ::fdopen(out_pipe[0], "r");
}

ProcessAdapter::~ProcessAdapter() { shutdown(); }

void ProcessAdapter::shutdown() noexcept {
  if (to_child_) std::fclose(to_child_);
  if (from_child_) std::fclose(from_child_);
  to_child_ = from_child_ = nullptr;
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

Category ProcessAdapter::classify(const std::filesystem::path& stimulus) {
  if (!to_child_ || !from_child_) {
    throw Error(ErrorKind::Protocol, "adapter '" + command_ + "' is no longer running");
  }
  const std::string request = adapter_request(stimulus) + "\n";
  if (std::fputs(request.c_str(), to_child_) < 0 || std::fflush(to_child_) != 0) {
    shutdown();
    throw Error(ErrorKind::Protocol, "adapter '" + command_ + "' stopped reading requests");
  }
  std::string line;
  for (int c; (c = std::fgetc(from_child_)) != EOF;) {
    if (c == '\n') break;
    line.push_back(static_cast<char>(c));
  }
  if (line.empty() && std::feof(from_child_)) {
    shutdown();
    throw Error(ErrorKind::Protocol, "adapter '" + command_ + "' exited before replying to " +
                                         stimulus.string());
  }
  return resolve_reply(parse_adapter_reply(line), map_);
}

// -- ReplayAdapter ------------------------------------------------------------------

ReplayAdapter::ReplayAdapter(const std::filesystem::path& file, const CategoryMap& map) {
  const std::string text = read_text_file(file);
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const auto line = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw protocol_error("malformed replay line", line);
    }
    if (!j.is_object() || !j.contains("stimulus") || !j["stimulus"].is_string()) {
      throw protocol_error("replay line lacks a \"stimulus\" string", line);
    }
    const auto name =
        std::filesystem::path(j["stimulus"].get<std::string>()).filename().string();
    const auto category = resolve_reply(reply_from_json(j, line), map);
    if (!answers_.emplace(name, category).second) {
      throw protocol_error("duplicate replay entry", line);
    }
  }
}

Category ReplayAdapter::classify(const std::filesystem::path& stimulus) {
  const auto it = answers_.find(stimulus.filename().string());
  if (it == answers_.end()) {
    throw Error(ErrorKind::Protocol, "no replay entry for " + stimulus.filename().string());
  }
  return it->second;
}

// -- run_experiment ---------------------------------------------------------------

namespace {

TrialRecord record_for(const Trial& t, const TrialSchedule& schedule, const RunOptions& options) {
  TrialRecord r;
  r.observer = options.observer;
  r.session = schedule.session + 1;
  r.run = options.run;
  r.trial = t.index;
  r.image_id = t.image_id;
  r.category = t.category;
  r.condition = t.condition.condition();
  r.is_practice = t.is_practice;
  return r;
}

/// Rows of an existing log. A torn final row left by a crash is cut off the
/// file; a log without a header is rewritten with one.
std::vector<TrialRecord> logged_rows(const std::filesystem::path& log) {
  std::string text = read_text_file(log);
  const auto nl = text.rfind('\n');
  const std::size_t complete = nl == std::string::npos ? 0 : nl + 1;
  if (complete != text.size()) {
    text.resize(complete);
    std::filesystem::resize_file(log, complete);
  }
  if (trim(text).empty()) {
    write_text_file(log, std::string(kTrialLogHeader) + "\n");
    return {};
  }
  return parse_trials_csv(text, std::nullopt, log.string());
}

}  // namespace

std::vector<TrialRecord> run_experiment(ClassifierAdapter& adapter, const TrialSchedule& schedule,
                                        const std::filesystem::path& stimuli_dir,
                                        const RunOptions& options) {
  std::vector<std::filesystem::path> paths;
  paths.reserve(schedule.trials.size());
  for (const auto& t : schedule.trials) {
    paths.push_back(stimulus_path(stimuli_dir, t));
    if (!std::filesystem::exists(paths.back())) {
      throw Error(ErrorKind::NotFound, "missing stimulus " + paths.back().string());
    }
  }

  std::vector<TrialRecord> records;
  const bool logging = !options.log.empty();
  if (logging && options.resume && std::filesystem::exists(options.log)) {
    records = logged_rows(options.log);
    if (records.size() > schedule.trials.size()) {
      throw Error(ErrorKind::Conflict, options.log.string() + " holds more rows than the schedule");
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto expected = record_for(schedule.trials[i], schedule, options);
      const auto& got = records[i];
      if (got.observer != expected.observer || got.trial != expected.trial ||
          got.image_id != expected.image_id || got.condition != expected.condition ||
          got.run != expected.run) {
        throw Error(ErrorKind::Conflict, options.log.string() + ": row " + std::to_string(i + 1) +
                                             " does not match the schedule");
      }
    }
  } else if (logging) {
    write_text_file(options.log, std::string(kTrialLogHeader) + "\n");
  }

  std::ofstream log;
  if (logging) {
    log.open(options.log, std::ios::app | std::ios::binary);
    if (!log) throw Error(ErrorKind::Io, "cannot append to " + options.log.string());
  }
  for (std::size_t i = records.size(); i < schedule.trials.size(); ++i) {
    TrialRecord r = record_for(schedule.trials[i], schedule, options);
    r.response = adapter.classify(paths[i]);
    if (logging) {
      log << trial_to_csv(r) << '\n';
      log.flush();
      if (!log) throw Error(ErrorKind::Io, "write failed on " + options.log.string());
    }
    records.push_back(std::move(r));
  }
  return records;
}

// -- accuracy_ranges --------------------------------------------------------------

std::vector<ConditionRange> accuracy_ranges(std::span<const TrialRecord> records, int runs) {
  if (runs < 1) throw Error(ErrorKind::InvalidParameter, "runs must be >= 1");
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "no records");

  std::vector<int> run_of(records.size(), 0);
  std::set<int> run_ids;
  for (const auto& r : records) {
    if (r.run > 0) run_ids.insert(r.run);
  }
  if (!run_ids.empty()) {
    if (static_cast<int>(run_ids.size()) != runs) {
      throw Error(ErrorKind::Partition, "records carry " + std::to_string(run_ids.size()) +
                                            " run indices, " + std::to_string(runs) +
                                            " requested");
    }
    const std::vector<int> ids(run_ids.begin(), run_ids.end());
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].run <= 0) {
        throw Error(ErrorKind::Partition, "record without a run index among indexed runs");
      }
      run_of[i] = static_cast<int>(std::lower_bound(ids.begin(), ids.end(), records[i].run) -
                                   ids.begin());
    }
  } else {
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < records.size(); ++i) {
      cells[{records[i].condition, category_index(records[i].category)}].push_back(i);
    }
    for (auto& [key, idx] : cells) {
      if (idx.size() % static_cast<std::size_t>(runs) != 0) {
        throw Error(ErrorKind::Partition,
                    "condition '" + key.first + "', category '" +
                        std::string(category_name(kAllCategories[key.second])) + "' has " +
                        std::to_string(idx.size()) + " trials, not divisible into " +
                        std::to_string(runs) + " runs");
      }
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(records[a].observer, records[a].session, records[a].trial) <
               std::tie(records[b].observer, records[b].session, records[b].trial);
      });
      const std::size_t per = idx.size() / static_cast<std::size_t>(runs);
      for (std::size_t k = 0; k < idx.size(); ++k) run_of[idx[k]] = static_cast<int>(k / per);
    }
  }

  std::vector<ConditionRange> out;
  std::map<std::string, std::size_t, std::less<>> where;
  std::vector<std::vector<std::pair<int, int>>> tallies;  // per condition, per run: correct,total
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = where.find(records[i].condition);
    if (it == where.end()) {
      it = where.emplace(records[i].condition, out.size()).first;
      out.emplace_back().condition = records[i].condition;
      tallies.emplace_back(static_cast<std::size_t>(runs), std::pair{0, 0});
    }
    auto& tally = tallies[it->second][static_cast<std::size_t>(run_of[i])];
    tally.second += 1;
    tally.first += records[i].correct() ? 1 : 0;
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    auto& range = out[c];
    for (const auto& [correct, total] : tallies[c]) {
      if (total == 0) {
        throw Error(ErrorKind::Partition,
                    "condition '" + range.condition + "' is missing from at least one run");
      }
      range.per_run.push_back(static_cast<double>(correct) / total);
      range.correct += correct;
      range.total += total;
    }
    double sum = 0.0;
    for (double v : range.per_run) sum += v;
    range.mean = sum / runs;
    range.min = *std::min_element(range.per_run.begin(), range.per_run.end());
    range.max = *std::max_element(range.per_run.begin(), range.per_run.end());
  }
  return out;
}

int max_feasible_runs(std::span<const int> category_counts, int per_run_per_category) {
  if (per_run_per_category < 1) {
    throw Error(ErrorKind::InvalidParameter, "images per run must be >= 1");
  }
  int runs = -1;
  for (int n : category_counts) {
    const int r = n / per_run_per_category;
    runs = runs < 0 ? r : std::min(runs, r);
  }
  return std::max(runs, 0);
}

int max_feasible_runs(const StimulusPool& pool, int per_run_per_category) {
  const auto counts = pool.category_counts();
  return max_feasible_runs(counts, per_run_per_category);
}

// -- Curves --------------------------------------------------------------------------

double condition_level(std::string_view condition) {
  const auto spec = DegradationSpec::parse(condition);
  if (spec.kind == DegradationKind::Grayscale) return 1.0;
  return spec.level();
}

stats::AccuracyCurve build_curve(std::span<const TrialRecord> records, ExperimentKind kind,
                                 std::string system, CurveMetric metric,
                                 std::optional<double> coherence) {
  stats::AccuracyCurve curve{std::move(system), {}};
  for (const auto& spec : experiment_conditions(kind)) {
    if (coherence && spec.kind == DegradationKind::Eidolon && spec.coherence != *coherence) {
      continue;
    }
    const std::string cond = spec.condition();
    std::map<std::string, std::vector<TrialRecord>> units;
    for (const auto& r : records) {
      if (r.is_practice || r.condition != cond) continue;
      const std::string unit =
          is_human_observer(r.observer) ? r.observer : r.observer + "#" + std::to_string(r.run);
      units[unit].push_back(r);
    }
    if (units.empty()) continue;
    std::vector<double> values;
    for (const auto& [unit, rs] : units) {
      values.push_back(metric == CurveMetric::Accuracy ? stats::accuracy(rs)
                                                       : stats::response_entropy(rs));
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    stats::CurvePoint pt;
    pt.level = spec.kind == DegradationKind::Grayscale ? 1.0 : spec.level();
    pt.label = cond;
    pt.value = sum / static_cast<double>(values.size());
    pt.range_min = *std::min_element(values.begin(), values.end());
    pt.range_max = *std::max_element(values.begin(), values.end());
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

}  // namespace objrec
