#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objrec/experiment.hpp"
#include "objrec/report.hpp"
#include "objrec/stats.hpp"
#include "objrec/trials.hpp"

namespace objrec {

/// "human" for human observers (pooled), the observer id otherwise.
std::string system_of(const TrialRecord& r);

struct SystemConfusion {
  std::string system;
  std::string condition;
  stats::ConfusionMatrix matrix;
};

struct SystemDifference {
  std::string a;
  std::string b;
  std::string condition;
  stats::ConfusionDifference diff;
};

struct SystemTTest {
  std::string system;
  std::string condition_a;
  std::string condition_b;
  stats::PairedTTest test;
};

/// Everything the figures and summary tables need, serializable to JSON.
struct Analysis {
  ExperimentKind experiment = ExperimentKind::Colour;
  std::optional<double> coherence;
  std::vector<std::string> systems;
  std::vector<stats::AccuracyCurve> accuracy;
  std::vector<stats::AccuracyCurve> entropy;
  std::vector<SystemConfusion> confusions;
  std::vector<SystemDifference> differences;
  std::vector<report::ThresholdRow> thresholds;
  std::vector<SystemTTest> t_tests;
  std::vector<std::string> samples;  ///< source images for the threshold grid
  std::uint64_t seed = 0;
};

struct AnalyzeOptions {
  std::optional<double> coherence;              ///< eidolon curves; default 1.0
  std::optional<std::string> confusion_condition;  ///< default: strongest signal present
  std::string reference = "human";              ///< side A of the difference matrices
  std::vector<std::string> samples;
  std::uint64_t seed = 0;
};

/// Curves, confusion matrices, reference-vs-system differences, 50%
/// thresholds and (colour experiment) per-system colour-vs-grayscale t-tests.
Analysis analyze(std::span<const TrialRecord> records, ExperimentKind kind,
                 const AnalyzeOptions& options = {});

std::string analysis_to_json(const Analysis& analysis);
Analysis analysis_from_json(std::string_view text);

/// Writes one figure. Heatmaps use `system` (default: the first one); the
/// difference heatmap uses the difference whose side b is `system`.
/// Threshold-grid warnings are appended to warnings.
void render_figure(const Analysis& analysis, report::FigureKind kind,
                   const std::filesystem::path& out,
                   const std::optional<std::string>& system = std::nullopt,
                   std::vector<std::string>* warnings = nullptr);

}  // namespace objrec
