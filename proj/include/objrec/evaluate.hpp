#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objrec/categories.hpp"
#include "objrec/dataset.hpp"
#include "objrec/stats.hpp"
#include "objrec/trials.hpp"

namespace objrec {

inline constexpr std::size_t kImageNetClasses = 1000;

/// Entry-level category of the most probable mapped class. Unmapped classes
/// are ignored; ties go to the lowest class index. NaN or negative entries
/// and lengths other than 1000 throw Error(InvalidInput).
Category classify_response(std::span<const double> probs, const CategoryMap& map);

// -- Adapter protocol -------------------------------------------------------------
//
// One JSON object per line in each direction. Requests:
//   {"stimulus": "/abs/path/to/image.png"}
// Replies, in request order, either
//   {"probs": [p0, ..., p999]}     ImageNet-ordered class probabilities
//   {"category": "dog"}            a direct entry-level answer
// Grayscale stacking and 224x224 centre cropping are the adapter's business.

struct AdapterReply {
  std::optional<std::vector<double>> probs;
  std::optional<Category> category;
};

std::string adapter_request(const std::filesystem::path& stimulus);

/// Throws Error(Protocol) quoting the offending line.
AdapterReply parse_adapter_reply(std::string_view line);

/// Reply to category, via classify_response for probability replies.
Category resolve_reply(const AdapterReply& reply, const CategoryMap& map);

class ClassifierAdapter {
 public:
  virtual ~ClassifierAdapter() = default;
  virtual Category classify(const std::filesystem::path& stimulus) = 0;
};

/// Child process speaking the line protocol on stdin/stdout.
class ProcessAdapter final : public ClassifierAdapter {
 public:
  ProcessAdapter(std::vector<std::string> argv, const CategoryMap& map);
  ~ProcessAdapter() override;
  ProcessAdapter(const ProcessAdapter&) = delete;
  ProcessAdapter& operator=(const ProcessAdapter&) = delete;

  Category classify(const std::filesystem::path& stimulus) override;

 private:
  void shutdown() noexcept;

  const CategoryMap& map_;
  std::string command_;
  int pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
};

/// Replays precomputed replies from a JSONL file whose lines carry a
/// "stimulus" key (matched by file name) next to "probs" or "category".
class ReplayAdapter final : public ClassifierAdapter {
 public:
  ReplayAdapter(const std::filesystem::path& file, const CategoryMap& map);
  Category classify(const std::filesystem::path& stimulus) override;

 private:
  std::map<std::string, Category, std::less<>> answers_;
};

// -- Running -------------------------------------------------------------------------

struct RunOptions {
  std::string observer = "classifier";
  int run = 0;
  std::filesystem::path log;  ///< append-only trial log; empty for none
  bool resume = false;        ///< continue after the rows already in log
};

/// Presents every scheduled stimulus (stimuli_dir / stimulus_filename) to the
/// adapter in schedule order. With resume, rows already logged are validated
/// against the schedule and skipped.
std::vector<TrialRecord> run_experiment(ClassifierAdapter& adapter, const TrialSchedule& schedule,
                                        const std::filesystem::path& stimuli_dir,
                                        const RunOptions& options = {});

// -- Run ranges ----------------------------------------------------------------------

struct ConditionRange {
  std::string condition;
  std::vector<double> per_run;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  int correct = 0;
  int total = 0;
};

inline constexpr int kDefaultRuns = 7;

/// Per-condition accuracy across runs. Records are split by their run index
/// when they carry `runs` distinct ones; otherwise each (condition, category)
/// cell is dealt into `runs` equal parts in (session, trial) order. Throws
/// Error(Partition) when cells do not split evenly.
std::vector<ConditionRange> accuracy_ranges(std::span<const TrialRecord> records,
                                            int runs = kDefaultRuns);

/// Largest number of disjoint runs a pool supports when each run shows
/// per_run_per_category images of every category.
int max_feasible_runs(const StimulusPool& pool, int per_run_per_category);
int max_feasible_runs(std::span<const int> category_counts, int per_run_per_category);

// -- Curves ------------------------------------------------------------------------

enum class CurveMetric { Accuracy, Entropy };

/// One point per condition of the experiment grid that occurs in records, in
/// grid order. Ranges span the per-unit values, where units are runs for
/// classifiers and observers for humans.
stats::AccuracyCurve build_curve(std::span<const TrialRecord> records, ExperimentKind kind,
                                 std::string system, CurveMetric metric = CurveMetric::Accuracy,
                                 std::optional<double> coherence = std::nullopt);

/// Numeric level of a canonical condition string (contrast %, noise width,
/// reach; colour 0 and grayscale 1).
double condition_level(std::string_view condition);

}  // namespace objrec
