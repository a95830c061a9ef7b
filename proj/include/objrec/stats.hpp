#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objrec/categories.hpp"
#include "objrec/trials.hpp"

namespace objrec::stats {

// -- Accuracy and entropy -------------------------------------------------------

/// Fraction correct; no-response counts as incorrect.
double accuracy(std::span<const TrialRecord> records);

struct ConditionAccuracy {
  std::string condition;
  int correct = 0;
  int total = 0;
  double accuracy() const noexcept { return total ? static_cast<double>(correct) / total : 0.0; }
};

/// Per-condition accuracy, conditions in first-seen order.
std::vector<ConditionAccuracy> accuracy_by_condition(std::span<const TrialRecord> records);

/// Shannon entropy (bits) of the 16-way response distribution; no-response
/// trials are excluded and the remaining fractions renormalized.
double response_entropy(std::span<const TrialRecord> records);
double entropy_bits(std::span<const int> counts);

// -- Confusion matrices -----------------------------------------------------------

/// Row 0 is no-response, rows 1..16 the response categories in response-screen
/// order; columns are presented categories.
class ConfusionMatrix {
 public:
  static constexpr int kRows = kNumResponses;
  static constexpr int kCols = kNumCategories;

  ConfusionMatrix() = default;

  static ConfusionMatrix from_records(std::span<const TrialRecord> records);

  static int row_of(const Response& r) noexcept { return r ? 1 + category_index(*r) : 0; }

  void add(Category presented, const Response& response, int count = 1);

  int count(int row, int col) const noexcept { return counts_[row][col]; }
  int column_total(int col) const noexcept;
  int total() const noexcept;
  /// count / column total; 0 for never-presented columns.
  double fraction(int row, int col) const noexcept;
  bool presented(int col) const noexcept { return column_total(col) > 0; }
  /// Trace of the 16x16 response block divided by the total.
  double accuracy() const noexcept;

 private:
  std::array<std::array<int, kCols>, kRows> counts_{};
};

ConfusionMatrix confusion_matrix(std::span<const TrialRecord> records);

// -- Exact binomial test -------------------------------------------------------------

enum class TwoSidedMethod {
  MinimumLikelihood,  ///< sum of outcomes no more likely than the observed one
  DoubledTail,        ///< 2 * min(lower tail, upper tail), capped at 1
};

struct BinomialTest {
  double p_value = 1.0;
  double ci_lower = 0.0;
  double ci_upper = 1.0;
  double null_p = 0.5;  ///< after clamping
  double estimate = 0.0;
};

inline constexpr double kNullClampLow = 0.001;
inline constexpr double kNullClampHigh = 0.999;

/// Binomial probability mass, computed in log space.
double binomial_pmf(int k, int n, double p);

/// Exact two-sided binomial test with a Clopper-Pearson interval.
/// p0 is clamped into [0.001, 0.999].
BinomialTest exact_binomial_test(int k, int n, double p0, double confidence = 0.95,
                                 TwoSidedMethod method = TwoSidedMethod::MinimumLikelihood);

/// Clopper-Pearson interval alone.
std::pair<double, double> clopper_pearson(int k, int n, double confidence = 0.95);

// -- Confusion difference -------------------------------------------------------------

enum class Significance : std::uint8_t { None, One, Two, Three };

/// "", "*", "**", "***"
const char* significance_stars(Significance s) noexcept;

inline constexpr std::array<double, 3> kAlphaLevels = {0.05, 0.01, 0.001};
/// Comparisons for one 16-category x 17-response matrix.
inline constexpr int kSingleMatrixComparisons = kNumCategories * kNumResponses;
/// Comparisons for a 3x3 grid of matrices.
inline constexpr int kGridComparisons = kSingleMatrixComparisons * 9;

struct ConfusionDifference {
  static constexpr int kRows = ConfusionMatrix::kRows;
  static constexpr int kCols = ConfusionMatrix::kCols;

  std::array<std::array<double, kCols>, kRows> delta{};
  std::array<std::array<double, kCols>, kRows> p_value{};
  std::array<std::array<Significance, kCols>, kRows> significance{};
  std::array<bool, kCols> column_used{};
  int comparisons = kSingleMatrixComparisons;
  std::array<double, 3> alphas{};  ///< Bonferroni-corrected levels

  int significant_cells() const noexcept;
};

/// delta = fraction_a - fraction_b per cell. Each cell's counts on the side
/// with fewer trials in that column are tested against the other side's
/// fraction (clamped) as null. Equal column totals test both directions and
/// keep the larger p-value, which makes the result symmetric in (a, b).
/// Columns presented on neither side are excluded; a column presented on
/// only one side throws Error(InvalidInput).
ConfusionDifference confusion_difference(const ConfusionMatrix& a, const ConfusionMatrix& b,
                                         int comparisons = kSingleMatrixComparisons);

// -- Curves, matching and thresholds ------------------------------------------------

struct CurvePoint {
  double level = 0.0;       ///< condition level (c, w, reach)
  std::string label;        ///< condition string
  double value = 0.0;       ///< accuracy or entropy
  double range_min = 0.0;
  double range_max = 0.0;
};

/// Per-system curve; points ordered from strongest to weakest signal.
struct AccuracyCurve {
  std::string system;
  std::vector<CurvePoint> points;
};

struct MatchResult {
  std::string system;
  std::optional<CurvePoint> point;  ///< nullopt: needs an extra condition
  bool needs_extra_condition() const noexcept { return !point.has_value(); }
};

inline constexpr double kMatchTolerance = 0.05;

/// Measured level whose accuracy is closest to target and within
/// kMatchTolerance (ties: stronger signal).
std::vector<MatchResult> match_performance(std::span<const AccuracyCurve> curves, double target,
                                           double tolerance = kMatchTolerance);

/// Level at which accuracy crosses 0.5, by linear interpolation between the
/// bracketing measured points. With several crossings the one at the
/// strongest signal wins. Throws Error(NoThreshold) without a crossing.
double threshold_50(const AccuracyCurve& curve, double target = 0.5);

// -- Paired t-test ---------------------------------------------------------------------

struct PairedTTest {
  double t = 0.0;
  int df = 0;
  double p_value = 1.0;
  double mean_difference = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

/// Paired-samples t-test on a - b (two-sided, 95% CI).
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b,
                          double confidence = 0.95);

/// Pairs per-trial correctness of two conditions for one observer: each
/// condition's main trials sorted by (run, session, trial) and zipped.
/// Throws Error(InvalidInput) when the two conditions have different counts.
std::pair<std::vector<double>, std::vector<double>> paired_correctness(
    std::span<const TrialRecord> records, std::string_view condition_a,
    std::string_view condition_b);

}  // namespace objrec::stats
