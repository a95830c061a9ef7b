#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objrec/categories.hpp"
#include "objrec/experiment.hpp"

namespace objrec {

/// One presentation-response pair, for humans and classifiers alike.
struct TrialRecord {
  std::string observer;  ///< human code ("subject-01") or classifier name
  int session = 1;
  int run = 0;           ///< classifier run index; 0 for humans
  int trial = 0;
  std::string image_id;
  Category category = Category::Knife;
  std::string condition;  ///< canonical DegradationSpec::condition()
  Response response;      ///< nullopt = no response
  std::optional<double> rt_ms;
  bool is_practice = false;
  std::optional<double> onset_ms;     ///< client-reported stimulus onset
  std::optional<double> click_ms;     ///< client-reported final click
  std::optional<double> received_ms;  ///< server receipt time

  bool correct() const noexcept { return response && *response == category; }

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Column header of the native trial-log schema.
inline constexpr std::string_view kTrialLogHeader =
    "observer,session,run,trial,image_id,category,condition,response,rt_ms,is_practice,"
    "onset_ms,click_ms,received_ms";

/// One CSV row (no trailing newline) in the native schema.
std::string trial_to_csv(const TrialRecord& r);

/// Writes header plus rows.
std::string trials_to_csv(std::span<const TrialRecord> records);

/// Reads either the native schema or the published raw-data schema
/// (subj,session,trial,rt,object_response,category,condition,imagename).
/// experiment resolves bare numeric condition tokens; when absent it is
/// guessed from the file name ("noise-experiment_...").
std::vector<TrialRecord> ingest_trials(const std::filesystem::path& file,
                                       std::optional<ExperimentKind> experiment = std::nullopt);
std::vector<TrialRecord> parse_trials_csv(std::string_view text,
                                          std::optional<ExperimentKind> experiment = std::nullopt,
                                          std::string_view source = "<memory>");

/// Reads every *.csv file under dir (recursively, sorted by path).
std::vector<TrialRecord> ingest_directory(const std::filesystem::path& dir,
                                          std::optional<ExperimentKind> experiment = std::nullopt);

/// Records of the given observer(s).
std::vector<TrialRecord> filter_observer(std::span<const TrialRecord> records,
                                         std::string_view observer);
std::vector<TrialRecord> filter_condition(std::span<const TrialRecord> records,
                                          std::string_view condition);
/// Drops practice trials.
std::vector<TrialRecord> main_trials(std::span<const TrialRecord> records);

/// True for observer ids that denote human participants ("subject-NN", "human...").
bool is_human_observer(std::string_view observer) noexcept;

}  // namespace objrec
