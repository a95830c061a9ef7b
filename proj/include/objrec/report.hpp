#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objrec/degrade.hpp"
#include "objrec/experiment.hpp"
#include "objrec/image.hpp"
#include "objrec/stats.hpp"

namespace objrec::report {

enum class FigureKind {
  AccuracyCurve,
  EntropyCurve,
  ConfusionHeatmap,
  ConfusionDifferenceHeatmap,
  ThresholdGrid,
};

std::string_view figure_kind_name(FigureKind kind) noexcept;
/// Accepts "accuracy_curve", "entropy_curve", "confusion_heatmap",
/// "confusion_difference_heatmap", "threshold_grid".
std::optional<FigureKind> parse_figure_kind(std::string_view name) noexcept;

enum class AxisScale { Linear, Log2, Log10, Categorical };

/// Log10 for contrast and noise, log2 for reach, categorical for colour.
AxisScale default_scale(ExperimentKind kind) noexcept;

struct CurveFigure {
  std::string title;
  std::string x_label;
  AxisScale scale = AxisScale::Linear;
  bool entropy = false;  ///< y in bits with the 4-bit ceiling, else accuracy
};

/// Line plot with min/max range bars. All curves must share one condition
/// grid (same labels, same order), otherwise Error(Layout). Log axes put a
/// zero level one step left of the smallest positive level.
std::string emit_curves(std::span<const stats::AccuracyCurve> curves, const CurveFigure& figure);

/// 17x16 grid shaded by column fraction.
std::string emit_confusion_heatmap(const stats::ConfusionMatrix& matrix, std::string_view title);

/// 17x16 grid coloured by significance level and sign, annotated with the
/// delta in percent, with a legend of the corrected alpha levels.
std::string emit_confusion_heatmap(const stats::ConfusionDifference& diff,
                                   std::string_view title);

struct ThresholdRow {
  std::string system;
  std::optional<double> level;  ///< 50% threshold; nullopt omits the row
};

struct ThresholdGrid {
  Image image;
  std::vector<std::string> rows;      ///< systems in drawn order
  std::vector<std::string> warnings;  ///< one per omitted system
};

inline constexpr int kTileSize = 256;

/// Degradation at a system's threshold level for one experiment.
DegradationSpec threshold_condition(ExperimentKind kind, double level, std::uint64_t seed,
                                    double coherence = 1.0);

/// Composite of rows x samples tiles (256x256 each). Each tile is the sample
/// degraded to the row's threshold; rows run from the most severe threshold
/// to the mildest. Samples must be 256x256; tile seeds depend on the sample
/// position only, so equal thresholds give identical rows.
ThresholdGrid emit_threshold_grid(std::span<const ThresholdRow> rows,
                                  std::span<const Image> samples, ExperimentKind kind,
                                  std::uint64_t seed, double coherence = 1.0);

}  // namespace objrec::report
