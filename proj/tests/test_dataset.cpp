#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "objrec/codec.hpp"
#include "objrec/dataset.hpp"
#include "objrec/error.hpp"
#include "support.hpp"

using namespace objrec;
using objrec::testing::TempDir;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

std::map<std::pair<Category, std::string>, int> cell_counts(const TrialSchedule& s) {
  std::map<std::pair<Category, std::string>, int> counts;
  for (const auto& t : s.trials) {
    if (!t.is_practice) ++counts[{t.category, t.condition.condition()}];
  }
  return counts;
}

}  // namespace

TEST(CategoryMap, GermanShepherdIsDog) {
  const auto& map = CategoryMap::builtin();
  EXPECT_EQ(map.map_wnid("n02106662"), Category::Dog);
  EXPECT_EQ(map.map_index(235), Category::Dog);
  EXPECT_FALSE(map.map_wnid("n99999999").has_value());
  EXPECT_FALSE(map.map_index(-1).has_value());
}

TEST(CategoryMap, PartialFunctionOverSixteenTargets) {
  const auto& map = CategoryMap::builtin();
  std::set<Category> targets;
  std::set<std::string> wnids;
  for (const auto& e : map.entries()) {
    EXPECT_TRUE(is_valid_wnid(e.wnid)) << e.wnid;
    EXPECT_TRUE(wnids.insert(e.wnid).second) << "duplicate " << e.wnid;
    EXPECT_GE(e.index, 0);
    EXPECT_LT(e.index, 1000);
    targets.insert(e.category);
  }
  EXPECT_EQ(targets.size(), 16u);
  EXPECT_LT(map.size(), 1000u);
}

TEST(CategoryMap, ParseRejectsConflicts) {
  EXPECT_THROW(CategoryMap::parse("index,wnid,category,lemma\n"
                                  "1,n00000001,dog,a\n"
                                  "2,n00000001,cat,b\n"),
               Error);
}

TEST(Preprocess, CropAndResizeGeometry) {
  const Image src = objrec::testing::random_image(512, 640, 3, 1);
  const Image sq = center_square_crop(src);
  EXPECT_EQ(sq.width(), 512);
  EXPECT_EQ(sq.height(), 512);
  EXPECT_EQ(sq.at(0, 0, 1), src.at(0, 64, 1));
  const Image out = resize_antialias(sq, 256, 256);
  EXPECT_EQ(out.width(), 256);
  EXPECT_EQ(out.height(), 256);
}

TEST(Preprocess, ResizeKeepsConstantsAndMean) {
  const Image flat(300, 300, 3, 0.4);
  for (double v : resize_antialias(flat, 100, 100).data()) EXPECT_NEAR(v, 0.4, 1e-12);
  const Image tex = objrec::testing::textured_image(512, 512, 3);
  EXPECT_NEAR(resize_antialias(tex, 256, 256).mean(), tex.mean(), 2e-3);
}

TEST(Preprocess, GrayscaleSourceDetection) {
  EXPECT_TRUE(is_grayscale_source(Image(4, 4, 1, 0.3)));
  EXPECT_TRUE(is_grayscale_source(Image(4, 4, 3, 0.3)));
  EXPECT_FALSE(is_grayscale_source(objrec::testing::random_image(4, 4, 3, 2)));
}

TEST(Preprocess, LuminanceRuleOnGaussianMeans) {
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> normal(0.45, 0.08);
  std::vector<double> means(400000);
  for (double& m : means) m = normal(gen);
  const double fraction =
      static_cast<double>(luminance_outliers(means, 2.0).size()) / static_cast<double>(means.size());
  EXPECT_NEAR(fraction, 0.0455, 0.0015);
}

TEST(Preprocess, LuminanceRuleExample) {
  const std::vector<double> means = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1.0};
  const auto out = luminance_outliers(means, 2.0);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], 9u);
}

TEST(Preprocess, PoolExclusionsAndReport) {
  TempDir tmp;
  std::filesystem::create_directories(tmp / "raw");
  std::vector<RawImage> raw;
  std::uint64_t seed = 10;
  for (Category c : kAllCategories) {
    for (int i = 0; i < 3; ++i) {
      const std::string id = std::string(category_name(c)) + std::to_string(i);
      save_image(tmp / "raw" / (id + ".png"), objrec::testing::random_image(260, 300, 3, seed++));
      raw.push_back({id, objrec::testing::wnid_of(c), tmp / "raw" / (id + ".png")});
    }
  }
  save_image(tmp / "raw" / "small.png", objrec::testing::random_image(200, 300, 3, 1));
  raw.push_back({"small", objrec::testing::wnid_of(Category::Dog), tmp / "raw" / "small.png"});
  save_image(tmp / "raw" / "gray.png", Image(300, 300, 3, 0.5));
  raw.push_back({"gray", objrec::testing::wnid_of(Category::Dog), tmp / "raw" / "gray.png"});
  raw.push_back({"unmapped", "n99999999", tmp / "raw" / "missing.png"});

  PoolOptions opt;
  opt.output_dir = tmp / "pool";
  std::filesystem::create_directories(opt.output_dir);
  PoolReport rep;
  const auto pool = preprocess_pool(raw, CategoryMap::builtin(), opt, &rep);
  EXPECT_EQ(rep.input, 51);
  EXPECT_EQ(rep.unmapped, 1);
  EXPECT_EQ(rep.grayscale, 1);
  EXPECT_EQ(rep.too_small, 1);
  EXPECT_EQ(rep.retained + rep.luminance_outliers, 48);
  for (const auto& r : pool.records) {
    const Image img = load_image(r.path);
    EXPECT_EQ(img.width(), 256);
    EXPECT_EQ(img.height(), 256);
  }

  std::vector<RawImage> one_category(raw.begin(), raw.begin() + 3);
  EXPECT_EQ(kind_of([&] { preprocess_pool(one_category, CategoryMap::builtin(), opt); }),
            ErrorKind::PoolConstruction);
}

TEST(Manifest, RoundTrip) {
  TempDir tmp;
  const auto pool = objrec::testing::record_pool(2);
  write_manifest(tmp / "m.csv", pool);
  const auto back = read_manifest(tmp / "m.csv");
  ASSERT_EQ(back.records.size(), pool.records.size());
  for (std::size_t i = 0; i < pool.records.size(); ++i) {
    EXPECT_EQ(back.records[i].image_id, pool.records[i].image_id);
    EXPECT_EQ(back.records[i].category, pool.records[i].category);
    EXPECT_EQ(back.records[i].wnid, pool.records[i].wnid);
  }
}

TEST(Schedule, ColourSessionShape) {
  const auto pool = objrec::testing::record_pool(80);
  const auto s = plan_session(pool, ExperimentKind::Colour, 7);
  EXPECT_EQ(s.trials.size(), 1280u);
  EXPECT_EQ(s.practice_count(), 0);
  for (const auto& [cell, n] : cell_counts(s)) EXPECT_EQ(n, 40) << cell.second;
  EXPECT_EQ(cell_counts(s).size(), 32u);
  EXPECT_EQ(s.break_positions(), (std::vector<int>{256, 512, 768, 1024}));
}

TEST(Schedule, ContrastCounterbalanceAndBreaks) {
  const auto pool = objrec::testing::record_pool(80);
  const auto s = plan_session(pool, ExperimentKind::Contrast, 3);
  for (const auto& [cell, n] : cell_counts(s)) EXPECT_EQ(n, 10);
  EXPECT_EQ(cell_counts(s).size(), 128u);
  EXPECT_EQ(s.break_every, 128);
  EXPECT_EQ(s.break_positions().size(), 9u);
  EXPECT_FALSE(s.trials.back().break_after);
}

TEST(Schedule, InvariantsOverSeeds) {
  const auto pool = objrec::testing::record_pool(82);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto kind : {ExperimentKind::Colour, ExperimentKind::Noise}) {
      const auto s = plan_session(pool, kind, seed, 0, {.practice_trials = 32});
      ASSERT_EQ(s.trials.size(), 1312u);
      std::set<std::string> ids;
      for (std::size_t i = 0; i < s.trials.size(); ++i) {
        EXPECT_EQ(s.trials[i].index, static_cast<int>(i));
        EXPECT_EQ(s.trials[i].is_practice, i < 32);
        EXPECT_TRUE(ids.insert(s.trials[i].image_id).second) << s.trials[i].image_id;
      }
      std::set<int> counts;
      for (const auto& [cell, n] : cell_counts(s)) counts.insert(n);
      EXPECT_EQ(counts.size(), 1u);
    }
  }
}

TEST(Schedule, EidolonThreeSessionsBalancedOverall) {
  const auto pool = objrec::testing::record_pool(240);
  const auto sessions = plan_experiment(pool, ExperimentKind::Eidolon, 11);
  ASSERT_EQ(sessions.size(), 3u);
  std::set<std::string> ids;
  std::map<std::pair<Category, std::string>, int> total;
  for (const auto& s : sessions) {
    EXPECT_EQ(s.trials.size(), 1280u);
    for (const auto& t : s.trials) EXPECT_TRUE(ids.insert(t.image_id).second);
    for (const auto& [cell, n] : cell_counts(s)) {
      EXPECT_TRUE(n == 3 || n == 4) << n;
      total[cell] += n;
    }
  }
  EXPECT_EQ(total.size(), 16u * 24u);
  for (const auto& [cell, n] : total) EXPECT_EQ(n, 10);
}

TEST(Schedule, SeedsChangeAssignmentsAndOrder) {
  const auto pool = objrec::testing::record_pool(80);
  const auto a = plan_session(pool, ExperimentKind::Contrast, 1);
  const auto b = plan_session(pool, ExperimentKind::Contrast, 2);
  int same = 0;
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    same += a.trials[i].image_id == b.trials[i].image_id;
  }
  EXPECT_LT(same, 10);
  const auto again = plan_session(pool, ExperimentKind::Contrast, 1);
  EXPECT_EQ(schedule_to_csv(a), schedule_to_csv(again));
}

TEST(Schedule, InsufficientPoolIsCapacityError) {
  const auto pool = objrec::testing::record_pool(79);
  EXPECT_EQ(kind_of([&] { plan_session(pool, ExperimentKind::Colour, 1); }), ErrorKind::Capacity);
  EXPECT_EQ(kind_of([&] { plan_experiment(objrec::testing::record_pool(100), ExperimentKind::Eidolon, 1); }),
            ErrorKind::Capacity);
}

TEST(Schedule, NoiseTrialsCarryPerImageSeeds) {
  const auto pool = objrec::testing::record_pool(80);
  const auto s = plan_session(pool, ExperimentKind::Noise, 5);
  std::set<std::uint64_t> seeds;
  for (const auto& t : s.trials) {
    EXPECT_EQ(t.condition.seed, stimulus_seed(5, t.image_id, DegradationSpec::noise(t.condition.noise_width)));
    seeds.insert(t.condition.seed);
  }
  EXPECT_GT(seeds.size(), 1270u);
}

TEST(Schedule, CsvRoundTrip) {
  const auto pool = objrec::testing::record_pool(81);
  const auto s = plan_session(pool, ExperimentKind::Noise, 9, 0, {.practice_trials = 16});
  const auto back = schedule_from_csv(schedule_to_csv(s));
  EXPECT_EQ(back.experiment, s.experiment);
  EXPECT_EQ(back.seed, s.seed);
  EXPECT_EQ(back.break_every, s.break_every);
  ASSERT_EQ(back.trials.size(), s.trials.size());
  for (std::size_t i = 0; i < s.trials.size(); ++i) {
    EXPECT_EQ(back.trials[i].image_id, s.trials[i].image_id);
    EXPECT_EQ(back.trials[i].condition, s.trials[i].condition);
    EXPECT_EQ(back.trials[i].is_practice, s.trials[i].is_practice);
    EXPECT_EQ(back.trials[i].break_after, s.trials[i].break_after);
  }
  EXPECT_FALSE(schedule_to_json(s).empty());
  EXPECT_THROW(schedule_from_csv("header\n0,x,dog\n"), Error);
}

TEST(Render, WritesEachStimulusOnceAndReuses) {
  TempDir tmp;
  std::filesystem::create_directories(tmp / "pool");
  const auto pool = objrec::testing::file_pool(tmp / "pool", 80);
  const auto s = plan_session(pool, ExperimentKind::Noise, 4);
  TrialSchedule small = s;
  small.trials.resize(24);
  const auto paths = render_stimuli(pool, small, tmp / "stim");
  ASSERT_EQ(paths.size(), 24u);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    EXPECT_EQ(paths[i], stimulus_path(tmp / "stim", small.trials[i]));
    EXPECT_TRUE(std::filesystem::exists(paths[i]));
  }
  const auto stamp = std::filesystem::last_write_time(paths[0]);
  render_stimuli(pool, small, tmp / "stim");
  EXPECT_EQ(std::filesystem::last_write_time(paths[0]), stamp);

  small.trials[0].image_id = "nope";
  EXPECT_EQ(kind_of([&] { render_stimuli(pool, small, tmp / "stim2"); }), ErrorKind::NotFound);
}
