#include "objrec/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "objrec/error.hpp"

namespace objrec::stats {

double accuracy(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "accuracy of an empty group");
  const auto correct = std::count_if(records.begin(), records.end(),
                                     [](const TrialRecord& r) { return r.correct(); });
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::vector<ConditionAccuracy> accuracy_by_condition(std::span<const TrialRecord> records) {
  std::vector<ConditionAccuracy> out;
  std::map<std::string, std::size_t, std::less<>> where;
  for (const auto& r : records) {
    auto it = where.find(r.condition);
    if (it == where.end()) {
      it = where.emplace(r.condition, out.size()).first;
      out.push_back({r.condition, 0, 0});
    }
    auto& acc = out[it->second];
    ++acc.total;
    if (r.correct()) ++acc.correct;
  }
  return out;
}

double entropy_bits(std::span<const int> counts) {
  long long total = 0;
  for (int c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

double response_entropy(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "entropy of an empty group");
  std::array<int, kNumCategories> counts{};
  for (const auto& r : records) {
    if (r.response) ++counts[static_cast<std::size_t>(category_index(*r.response))];
  }
  return entropy_bits(counts);
}

// -- ConfusionMatrix ---------------------------------------------------------

ConfusionMatrix ConfusionMatrix::from_records(std::span<const TrialRecord> records) {
  ConfusionMatrix m;
  for (const auto& r : records) m.add(r.category, r.response);
  return m;
}

void ConfusionMatrix::add(Category presented, const Response& response, int count) {
  counts_[static_cast<std::size_t>(row_of(response))]
         [static_cast<std::size_t>(category_index(presented))] += count;
}

int ConfusionMatrix::column_total(int col) const noexcept {
  int total = 0;
  for (int r = 0; r < kRows; ++r) total += counts_[r][col];
  return total;
}

int ConfusionMatrix::total() const noexcept {
  int total = 0;
  for (int c = 0; c < kCols; ++c) total += column_total(c);
  return total;
}

double ConfusionMatrix::fraction(int row, int col) const noexcept {
  const int n = column_total(col);
  return n ? static_cast<double>(counts_[row][col]) / n : 0.0;
}

double ConfusionMatrix::accuracy() const noexcept {
  const int n = total();
  if (!n) return 0.0;
  int diag = 0;
  for (int c = 0; c < kCols; ++c) diag += counts_[c + 1][c];
  return static_cast<double>(diag) / n;
}

ConfusionMatrix confusion_matrix(std::span<const TrialRecord> records) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "confusion matrix of no records");
  return ConfusionMatrix::from_records(records);
}

// -- Binomial ----------------------------------------------------------------

double binomial_pmf(int k, int n, double p) {
  if (k < 0 || k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                         k * std::log(p) + (n - k) * std::log1p(-p);
  return std::exp(log_pmf);
}

namespace {

double lower_tail(int k, int n, double p) {  // P(X <= k)
  double s = 0.0;
  for (int i = 0; i <= k; ++i) s += binomial_pmf(i, n, p);
  return s;
}

double upper_tail(int k, int n, double p) {  // P(X >= k)
  double s = 0.0;
  for (int i = std::max(k, 0); i <= n; ++i) s += binomial_pmf(i, n, p);
  return s;
}

/// Minimum-likelihood two-sided p-value. Walks the far tail inward from its
/// end, counting outcomes whose mass does not exceed the observed one.
double minimum_likelihood_p(int k, int n, double p) {
  constexpr double kRelErr = 1.0 + 1e-7;
  const double d = binomial_pmf(k, n, p);
  const double m = n * p;
  if (static_cast<double>(k) == m) return 1.0;
  double pval;
  if (k < m) {
    int y = 0;
    for (int i = static_cast<int>(std::ceil(m)); i <= n; ++i) {
      if (binomial_pmf(i, n, p) <= d * kRelErr) ++y;
    }
    pval = lower_tail(k, n, p) + upper_tail(n - y + 1, n, p);
  } else {
    int y = 0;
    for (int i = 0; i <= static_cast<int>(std::floor(m)); ++i) {
      if (binomial_pmf(i, n, p) <= d * kRelErr) ++y;
    }
    pval = lower_tail(y - 1, n, p) + upper_tail(k, n, p);
  }
  return std::min(1.0, pval);
}

}  // namespace

std::pair<double, double> clopper_pearson(int k, int n, double confidence) {
  if (n <= 0 || k < 0 || k > n) {
    throw Error(ErrorKind::InvalidInput, "clopper_pearson needs 0 <= k <= n, n > 0");
  }
  const double alpha = 1.0 - confidence;
  const double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, alpha / 2.0);
  const double hi = k == n ? 1.0 : boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - alpha / 2.0);
  return {lo, hi};
}

BinomialTest exact_binomial_test(int k, int n, double p0, double confidence,
                                 TwoSidedMethod method) {
  if (n <= 0) throw Error(ErrorKind::InvalidInput, "binomial test needs n > 0");
  if (k < 0 || k > n) throw Error(ErrorKind::InvalidInput, "binomial test needs 0 <= k <= n");
  if (!(p0 >= 0.0 && p0 <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "binomial null probability must lie in [0,1]");
  }
  BinomialTest out;
  out.null_p = std::clamp(p0, kNullClampLow, kNullClampHigh);
  out.estimate = static_cast<double>(k) / n;
  if (method == TwoSidedMethod::MinimumLikelihood) {
    out.p_value = minimum_likelihood_p(k, n, out.null_p);
  } else {
    out.p_value = std::min(
        1.0, 2.0 * std::min(lower_tail(k, n, out.null_p), upper_tail(k, n, out.null_p)));
  }
  std::tie(out.ci_lower, out.ci_upper) = clopper_pearson(k, n, confidence);
  return out;
}

// -- Confusion difference ---------------------------------------------------

const char* significance_stars(Significance s) noexcept {
  switch (s) {
    case Significance::None: return "";
    case Significance::One: return "*";
    case Significance::Two: return "**";
    case Significance::Three: return "***";
  }
  return "";
}

int ConfusionDifference::significant_cells() const noexcept {
  int n = 0;
  for (const auto& row : significance) {
    for (auto s : row) n += s != Significance::None;
  }
  return n;
}

ConfusionDifference confusion_difference(const ConfusionMatrix& a, const ConfusionMatrix& b,
                                         int comparisons) {
  if (comparisons < 1) throw Error(ErrorKind::InvalidInput, "comparisons must be >= 1");
  ConfusionDifference out;
  out.comparisons = comparisons;
  for (std::size_t i = 0; i < kAlphaLevels.size(); ++i) {
    out.alphas[i] = kAlphaLevels[i] / comparisons;
  }
  for (int col = 0; col < ConfusionMatrix::kCols; ++col) {
    if (a.presented(col) != b.presented(col)) {
      throw Error(ErrorKind::InvalidInput,
                  "category '" + std::string(category_name(kAllCategories[col])) +
                      "' is presented in only one of the two matrices");
    }
  }
  for (int col = 0; col < ConfusionMatrix::kCols; ++col) {
    const int na = a.column_total(col);
    const int nb = b.column_total(col);
    if (na == 0) {
      for (int row = 0; row < ConfusionMatrix::kRows; ++row) out.p_value[row][col] = 1.0;
      continue;
    }
    out.column_used[col] = true;
    for (int row = 0; row < ConfusionMatrix::kRows; ++row) {
      const double fa = a.fraction(row, col);
      const double fb = b.fraction(row, col);
      out.delta[row][col] = fa - fb;
      double p;
      if (na < nb) {
        p = exact_binomial_test(a.count(row, col), na, fb).p_value;
      } else if (nb < na) {
        p = exact_binomial_test(b.count(row, col), nb, fa).p_value;
      } else {
        p = std::max(exact_binomial_test(a.count(row, col), na, fb).p_value,
                     exact_binomial_test(b.count(row, col), nb, fa).p_value);
      }
      out.p_value[row][col] = p;
      Significance s = Significance::None;
      for (std::size_t i = 0; i < out.alphas.size(); ++i) {
        if (p < out.alphas[i]) s = static_cast<Significance>(i + 1);
      }
      out.significance[row][col] = s;
    }
  }
  return out;
}

// -- Matching and thresholds ---------------------------------------------------

std::vector<MatchResult> match_performance(std::span<const AccuracyCurve> curves, double target,
                                           double tolerance) {
  std::vector<MatchResult> out;
  for (const auto& curve : curves) {
    MatchResult m{curve.system, std::nullopt};
    double best = tolerance;
    for (const auto& pt : curve.points) {
      const double gap = std::abs(pt.value - target);
      if (gap < best) {
        best = gap;
        m.point = pt;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

double threshold_50(const AccuracyCurve& curve, double target) {
  const auto& pts = curve.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].value == target) return pts[i].level;
    if (i + 1 == pts.size()) break;
    const auto& a = pts[i];
    const auto& b = pts[i + 1];
    if (b.value == target) return b.level;
    if ((a.value - target) * (b.value - target) < 0.0) {
      return a.level + (target - a.value) * (b.level - a.level) / (b.value - a.value);
    }
  }
  throw Error(ErrorKind::NoThreshold,
              "accuracy curve of '" + curve.system + "' never crosses " + std::to_string(target));
}

// -- Paired t-test ------------------------------------------------------------

PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b,
                          double confidence) {
  if (a.size() != b.size()) throw Error(ErrorKind::InvalidInput, "paired vectors differ in length");
  if (a.size() < 2) throw Error(ErrorKind::InvalidInput, "paired t-test needs n >= 2");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  if (ss == 0.0) throw Error(ErrorKind::ZeroVariance, "paired differences have zero variance");
  const double se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);

  PairedTTest out;
  out.df = static_cast<int>(a.size()) - 1;
  out.mean_difference = mean;
  out.t = mean / se;
  const boost::math::students_t dist(out.df);
  out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t))));
  const double q = boost::math::quantile(dist, 1.0 - (1.0 - confidence) / 2.0);
  out.ci_lower = mean - q * se;
  out.ci_upper = mean + q * se;
  return out;
}

std::pair<std::vector<double>, std::vector<double>> paired_correctness(
    std::span<const TrialRecord> records, std::string_view condition_a,
    std::string_view condition_b) {
  auto collect = [&](std::string_view cond) {
    std::vector<const TrialRecord*> rs;
    for (const auto& r : records) {
      if (r.condition == cond && !r.is_practice) rs.push_back(&r);
    }
    std::stable_sort(rs.begin(), rs.end(), [](const TrialRecord* x, const TrialRecord* y) {
      return std::tie(x->run, x->session, x->trial) < std::tie(y->run, y->session, y->trial);
    });
    std::vector<double> v;
    v.reserve(rs.size());
    for (const auto* r : rs) v.push_back(r->correct() ? 1.0 : 0.0);
    return v;
  };
  auto a = collect(condition_a);
  auto b = collect(condition_b);
  if (a.size() != b.size()) {
    throw Error(ErrorKind::InvalidInput, "conditions '" + std::string(condition_a) + "' and '" +
                                             std::string(condition_b) +
                                             "' have different trial counts (" +
                                             std::to_string(a.size()) + " vs " +
                                             std::to_string(b.size()) + ")");
  }
  return {std::move(a), std::move(b)};
}

}  // namespace objrec::stats
