#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <numeric>

#include "objrec/error.hpp"
#include "objrec/stats.hpp"

using namespace objrec;
using namespace objrec::stats;

namespace {

TrialRecord trial(Category presented, Response response, std::string condition = "colour",
                  std::string observer = "subject-01", int index = 0) {
  TrialRecord r;
  r.observer = std::move(observer);
  r.category = presented;
  r.response = response;
  r.condition = std::move(condition);
  r.trial = index;
  return r;
}

double brute_force_p(int k, int n, double p0) {
  const boost::math::binomial_distribution<double> dist(n, p0);
  const double observed = boost::math::pdf(dist, k);
  double p = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double d = boost::math::pdf(dist, j);
    if (d <= observed * (1.0 + 1e-7)) p += d;
  }
  return std::min(1.0, p);
}

AccuracyCurve curve(std::vector<std::pair<double, double>> pts) {
  AccuracyCurve c{"sys", {}};
  for (auto [level, acc] : pts) {
    c.points.push_back({level, std::to_string(level), acc, acc, acc});
  }
  return c;
}

ConfusionMatrix random_matrix(std::uint64_t seed, int per_column) {
  ConfusionMatrix m;
  std::uint64_t x = seed;
  for (Category c : kAllCategories) {
    for (int i = 0; i < per_column; ++i) {
      x = x * 6364136223846793005ULL + 1442695040888963407ULL;
      const int row = static_cast<int>((x >> 33) % 20);
      Response r = row >= 17 ? Response(c) : row == 0 ? Response() : Response(kAllCategories[row - 1]);
      m.add(c, r);
    }
  }
  return m;
}

}  // namespace

TEST(Accuracy, CountsNoResponseAsIncorrect) {
  std::vector<TrialRecord> recs = {trial(Category::Cat, Category::Cat),
                                   trial(Category::Dog, std::nullopt),
                                   trial(Category::Car, Category::Boat),
                                   trial(Category::Car, Category::Car)};
  EXPECT_DOUBLE_EQ(accuracy(recs), 0.5);
  recs.push_back(trial(Category::Car, Category::Car, "c5"));
  const auto by = accuracy_by_condition(recs);
  ASSERT_EQ(by.size(), 2u);
  EXPECT_EQ(by[0].condition, "colour");
  EXPECT_EQ(by[0].correct, 2);
  EXPECT_EQ(by[0].total, 4);
  EXPECT_DOUBLE_EQ(by[1].accuracy(), 1.0);
}

TEST(Accuracy, UniformResponderExpectsChance) {
  std::vector<TrialRecord> recs;
  for (Category p : kAllCategories) {
    for (Category r : kAllCategories) recs.push_back(trial(p, r));
  }
  EXPECT_DOUBLE_EQ(accuracy(recs), 1.0 / 16.0);
}

TEST(Entropy, Examples) {
  std::vector<int> uniform(16, 5), single(16, 0), half(16, 0);
  single[3] = 40;
  half[2] = half[9] = 7;
  EXPECT_EQ(entropy_bits(uniform), 4.0);
  EXPECT_EQ(entropy_bits(single), 0.0);
  EXPECT_DOUBLE_EQ(entropy_bits(half), 1.0);
}

TEST(Entropy, NoResponseExcludedAndRenormalized) {
  std::vector<TrialRecord> recs = {trial(Category::Cat, Category::Cat), trial(Category::Cat, Category::Dog),
                                   trial(Category::Cat, std::nullopt), trial(Category::Cat, std::nullopt)};
  EXPECT_DOUBLE_EQ(response_entropy(recs), 1.0);
}

TEST(Entropy, PermutationInvariantAndMaximalAtUniform) {
  std::vector<int> counts = {1, 4, 9, 0, 2, 7, 3, 3, 5, 8, 1, 0, 6, 2, 2, 11};
  const double h = entropy_bits(counts);
  std::vector<int> perm = counts;
  for (int i = 0; i < 20; ++i) {
    std::next_permutation(perm.begin(), perm.end());
    EXPECT_NEAR(entropy_bits(perm), h, 1e-12);
  }
  EXPECT_LT(h, 4.0);
  std::vector<int> nearly(16, 10);
  nearly[0] = 11;
  EXPECT_LT(entropy_bits(nearly), 4.0);
}

TEST(Confusion, ColumnsSumToOneAndAccuracyIsTrace) {
  const auto m = random_matrix(3, 50);
  int trace = 0;
  for (int col = 0; col < 16; ++col) {
    double s = 0.0;
    for (int row = 0; row < 17; ++row) s += m.fraction(row, col);
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_EQ(m.column_total(col), 50);
    trace += m.count(col + 1, col);
  }
  EXPECT_DOUBLE_EQ(m.accuracy(), trace / 800.0);

  std::vector<TrialRecord> recs = {trial(Category::Cat, Category::Cat), trial(Category::Cat, std::nullopt),
                                   trial(Category::Dog, Category::Cat)};
  const auto cm = confusion_matrix(recs);
  EXPECT_DOUBLE_EQ(cm.accuracy(), accuracy(recs));
  EXPECT_EQ(cm.count(0, category_index(Category::Cat)), 1);
  EXPECT_FALSE(cm.presented(category_index(Category::Bear)));
  EXPECT_EQ(cm.fraction(0, category_index(Category::Bear)), 0.0);
}

TEST(Binomial, Examples) {
  const auto t = exact_binomial_test(0, 10, 0.5);
  EXPECT_NEAR(t.p_value, 2.0 / 1024.0, 1e-15);
  EXPECT_LT(exact_binomial_test(93, 120, 0.968).p_value, 0.001 / 272.0);
  for (double p0 : {0.001, 0.2, 0.999}) {
    EXPECT_EQ(exact_binomial_test(25, 25, p0).ci_upper, 1.0);
  }
  EXPECT_EQ(exact_binomial_test(0, 25, 0.5).ci_lower, 0.0);
}

TEST(Binomial, ReferenceValues) {
  const auto t = exact_binomial_test(7, 20, 0.5);
  EXPECT_NEAR(t.p_value, 0.2631760, 1e-6);
  EXPECT_NEAR(t.ci_lower, 0.1539092, 1e-6);
  EXPECT_NEAR(t.ci_upper, 0.5921885, 1e-6);
  EXPECT_NEAR(exact_binomial_test(0, 10, 0.5).ci_upper, 0.3084971, 1e-6);
  EXPECT_DOUBLE_EQ(t.estimate, 0.35);
}

TEST(Binomial, MatchesBruteForceOnGrid) {
  double worst = 0.0;
  for (double p0 : {0.001, 0.1, 0.5, 0.9, 0.999}) {
    for (int n = 1; n <= 200; ++n) {
      for (int k = 0; k <= n; ++k) {
        worst = std::max(worst, std::abs(exact_binomial_test(k, n, p0).p_value - brute_force_p(k, n, p0)));
      }
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Binomial, ClampsNullAndRejectsBadInput) {
  EXPECT_EQ(exact_binomial_test(3, 10, 0.0).null_p, kNullClampLow);
  EXPECT_EQ(exact_binomial_test(3, 10, 1.0).null_p, kNullClampHigh);
  EXPECT_THROW(exact_binomial_test(0, 0, 0.5), Error);
  EXPECT_THROW(exact_binomial_test(11, 10, 0.5), Error);
  EXPECT_THROW(exact_binomial_test(-1, 10, 0.5), Error);
}

TEST(Binomial, DoubledTailAgreesForSymmetricNull) {
  for (int k = 0; k <= 30; ++k) {
    const double ml = exact_binomial_test(k, 30, 0.5).p_value;
    const double dt = exact_binomial_test(k, 30, 0.5, 0.95, TwoSidedMethod::DoubledTail).p_value;
    EXPECT_NEAR(ml, dt, 1e-12);
  }
  const boost::math::binomial_distribution<double> dist(30, 0.3);
  EXPECT_NEAR(exact_binomial_test(2, 30, 0.3, 0.95, TwoSidedMethod::DoubledTail).p_value,
              2.0 * boost::math::cdf(dist, 2), 1e-12);
}

TEST(ConfusionDifference, SelfIsZeroAndNotSignificant) {
  const auto m = random_matrix(5, 80);
  const auto d = confusion_difference(m, m);
  for (int r = 0; r < 17; ++r) {
    for (int c = 0; c < 16; ++c) {
      EXPECT_EQ(d.delta[r][c], 0.0);
      EXPECT_EQ(d.significance[r][c], Significance::None);
    }
  }
  EXPECT_EQ(d.significant_cells(), 0);
  EXPECT_NEAR(d.alphas[0], 0.05 / 272, 1e-18);
  EXPECT_NEAR(confusion_difference(m, m, kGridComparisons).alphas[2], 0.001 / 2448, 1e-18);
}

TEST(ConfusionDifference, SwapNegatesDeltasKeepsStars) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = random_matrix(seed, 120);
    const auto b = random_matrix(seed + 100, seed == 1 ? 120 : 280);
    const auto ab = confusion_difference(a, b);
    const auto ba = confusion_difference(b, a);
    for (int r = 0; r < 17; ++r) {
      for (int c = 0; c < 16; ++c) {
        EXPECT_EQ(ab.delta[r][c], -ba.delta[r][c]);
        EXPECT_EQ(ab.significance[r][c], ba.significance[r][c]);
        EXPECT_EQ(ab.p_value[r][c], ba.p_value[r][c]);
      }
    }
  }
}

TEST(ConfusionDifference, FewerTrialsSideIsTested) {
  ConfusionMatrix humans, net;
  const int cat = category_index(Category::Cat);
  humans.add(Category::Cat, Category::Cat, 93);
  humans.add(Category::Cat, Category::Dog, 27);
  net.add(Category::Cat, Category::Cat, 271);
  net.add(Category::Cat, Category::Dog, 9);
  const auto d = confusion_difference(humans, net);
  const double null = 271.0 / 280.0;
  EXPECT_NEAR(d.p_value[1 + cat][cat], exact_binomial_test(93, 120, null).p_value, 1e-15);
  EXPECT_EQ(d.significance[1 + cat][cat], Significance::Three);
  EXPECT_STREQ(significance_stars(d.significance[1 + cat][cat]), "***");
  EXPECT_TRUE(d.column_used[cat]);
  EXPECT_FALSE(d.column_used[category_index(Category::Dog)]);
}

TEST(ConfusionDifference, MismatchedCategorySetsRejected) {
  ConfusionMatrix a, b;
  a.add(Category::Cat, Category::Cat);
  a.add(Category::Dog, Category::Dog);
  b.add(Category::Cat, Category::Cat);
  try {
    confusion_difference(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(Threshold, Examples) {
  EXPECT_NEAR(threshold_50(curve({{0.1, 0.6}, {0.2, 0.4}})), 0.15, 1e-15);
  EXPECT_EQ(threshold_50(curve({{0.0, 0.9}, {0.1, 0.5}, {0.2, 0.3}})), 0.1);
  try {
    threshold_50(curve({{0.0, 0.9}, {0.1, 0.7}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoThreshold);
  }
}

TEST(Threshold, RecoversAnalyticCrossingOnMonotoneCurves) {
  for (int s = 1; s <= 50; ++s) {
    const double slope = 0.1 + 0.004 * s;
    const double crossing = 0.02 * s;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 10; ++i) {
      const double level = 0.1 * i * (1.0 + 0.01 * s);
      pts.emplace_back(level, 0.5 - slope * (level - crossing));
    }
    if (pts.front().second < 0.5 || pts.back().second > 0.5) continue;
    EXPECT_NEAR(threshold_50(curve(pts)), crossing, 1e-12) << s;
  }
}

TEST(Threshold, StrongestSignalCrossingWins) {
  EXPECT_NEAR(threshold_50(curve({{0, 0.8}, {1, 0.4}, {2, 0.6}, {3, 0.2}})), 0.75, 1e-15);
}

TEST(Match, ClosestWithinToleranceOrFlag) {
  std::vector<AccuracyCurve> curves = {curve({{0.0, 0.81}, {0.03, 0.78}, {0.05, 0.7}}),
                                       curve({{0.0, 0.95}, {0.03, 0.82}, {0.05, 0.6}}),
                                       curve({{0.0, 0.99}, {0.03, 0.97}})};
  const auto m = match_performance(curves, 0.805);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].point->level, 0.0);
  EXPECT_EQ(m[1].point->level, 0.03);
  EXPECT_TRUE(m[2].needs_extra_condition());
  const auto tie = match_performance(std::vector{curve({{0.0, 0.625}, {0.1, 0.375}})}, 0.5, 0.25);
  EXPECT_EQ(tie[0].point->level, 0.0);
}

TEST(TTest, HandComputedExample) {
  const std::vector<double> a = {1, 0, 1, 0}, b = {0, 0, 0, 0};
  const auto t = paired_t_test(a, b);
  EXPECT_DOUBLE_EQ(t.mean_difference, 0.5);
  EXPECT_NEAR(t.t, std::sqrt(3.0), 1e-12);
  EXPECT_EQ(t.df, 3);
  EXPECT_NEAR(t.p_value, 0.1816901, 1e-6);
  EXPECT_LT(t.ci_lower, 0.5);
  EXPECT_GT(t.ci_upper, 0.5);
}

TEST(TTest, Errors) {
  const std::vector<double> a = {1, 0, 1}, b = {1, 0, 1};
  try {
    paired_t_test(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVariance);
  }
  EXPECT_THROW(paired_t_test(std::vector<double>{1.0}, std::vector<double>{0.0}), Error);
  EXPECT_THROW(paired_t_test(std::vector<double>{1, 0}, std::vector<double>{0, 0, 1}), Error);
}

TEST(TTest, PairedCorrectnessSortsAndZips) {
  std::vector<TrialRecord> recs;
  recs.push_back(trial(Category::Cat, Category::Cat, "colour", "alexnet", 5));
  recs.push_back(trial(Category::Cat, Category::Dog, "grayscale", "alexnet", 2));
  recs.push_back(trial(Category::Cat, Category::Dog, "colour", "alexnet", 1));
  recs.push_back(trial(Category::Cat, Category::Cat, "grayscale", "alexnet", 9));
  auto practice = trial(Category::Cat, Category::Cat, "colour", "alexnet", 0);
  practice.is_practice = true;
  recs.push_back(practice);
  const auto [a, b] = paired_correctness(recs, "colour", "grayscale");
  EXPECT_EQ(a, (std::vector<double>{0, 1}));
  EXPECT_EQ(b, (std::vector<double>{0, 1}));
  recs.push_back(trial(Category::Cat, Category::Cat, "colour", "alexnet", 11));
  EXPECT_THROW(paired_correctness(recs, "colour", "grayscale"), Error);
}
