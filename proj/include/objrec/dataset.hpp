#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "objrec/categories.hpp"
#include "objrec/degrade.hpp"
#include "objrec/experiment.hpp"
#include "objrec/image.hpp"

namespace objrec {

// -- Pool preprocessing -------------------------------------------------------

struct RawImage {
  std::string image_id;
  std::string wnid;
  std::filesystem::path path;
};

struct PoolRecord {
  std::string image_id;
  std::string wnid;
  Category category = Category::Knife;
  std::filesystem::path path;  ///< preprocessed 256x256 image
  double mean = 0.0;           ///< mean grayscale value
};

struct StimulusPool {
  std::vector<PoolRecord> records;

  std::array<int, kNumCategories> category_counts() const;
  std::vector<const PoolRecord*> of_category(Category c) const;
};

struct PoolOptions {
  int size = 256;
  double max_sd = 2.0;  ///< luminance outlier cut, in pool standard deviations
  std::filesystem::path output_dir;
  /// Fail unless all 16 categories survive filtering.
  bool require_all_categories = true;
};

struct PoolReport {
  int input = 0;
  int unmapped = 0;
  int grayscale = 0;
  int too_small = 0;
  int luminance_outliers = 0;
  int retained = 0;
};

/// True for single-plane sources and for 3-plane sources with R = G = B.
bool is_grayscale_source(const Image& img) noexcept;

/// Largest centred square.
Image center_square_crop(const Image& img);

/// Antialiased downsampling with a separable Lanczos-3 filter whose support
/// widens with the reduction factor.
Image resize_antialias(const Image& img, int width, int height);

/// Indices of values farther than k standard deviations from the mean
/// (two-pass mean and population standard deviation).
std::vector<std::size_t> luminance_outliers(std::span<const double> means, double k);

/// Excludes grayscale and undersized sources, centre-crops, resizes to
/// size x size, drops luminance outliers and writes the retained images
/// (PNG) to options.output_dir.
StimulusPool preprocess_pool(std::span<const RawImage> raw, const CategoryMap& map,
                             const PoolOptions& options, PoolReport* report = nullptr);

/// Pool manifest CSV: image_id,wnid,category,path,mean
void write_manifest(const std::filesystem::path& path, const StimulusPool& pool);
StimulusPool read_manifest(const std::filesystem::path& path);

// -- Session planning -----------------------------------------------------------

struct Trial {
  int index = 0;
  std::string image_id;
  Category category = Category::Knife;
  DegradationSpec condition;
  bool is_practice = false;
  bool break_after = false;
};

struct TrialSchedule {
  ExperimentKind experiment = ExperimentKind::Colour;
  int session = 0;
  std::uint64_t seed = 0;
  int break_every = 256;
  std::vector<Trial> trials;  ///< practice trials first, then main trials

  int practice_count() const;
  int main_count() const;
  /// Main-trial counts after which a break is due.
  std::vector<int> break_positions() const;
};

struct PlanOptions {
  int images_per_category = kImagesPerCategory;
  int practice_trials = 0;
};

/// Plans every session of an experiment (3 for eidolon) with images drawn
/// without replacement across all sessions. Each (category, condition) pair
/// occurs images_per_category * sessions / |conditions| times.
std::vector<TrialSchedule> plan_experiment(const StimulusPool& pool, ExperimentKind kind,
                                           std::uint64_t seed, const PlanOptions& options = {});

TrialSchedule plan_session(const StimulusPool& pool, ExperimentKind kind, std::uint64_t seed,
                           int session = 0, const PlanOptions& options = {});

/// Per-image condition seed: hash(session seed, image id, condition).
std::uint64_t stimulus_seed(std::uint64_t session_seed, std::string_view image_id,
                            const DegradationSpec& condition);

/// Seeded Fisher-Yates; identical across platforms.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed);

/// Renders each trial's stimulus from its pool image into dir (PNG, named by
/// stimulus_filename). Files already present are reused. Returns the paths
/// in trial order.
std::vector<std::filesystem::path> render_stimuli(const StimulusPool& pool,
                                                  const TrialSchedule& schedule,
                                                  const std::filesystem::path& dir);

/// Stimulus path of one trial inside dir.
std::filesystem::path stimulus_path(const std::filesystem::path& dir, const Trial& trial);

/// Schedule CSV:
/// trial_index,image_id,category,condition_string,is_practice,break_after
/// preceded by a "# experiment=... session=... seed=... break_every=..." line.
std::string schedule_to_csv(const TrialSchedule& schedule);
TrialSchedule schedule_from_csv(std::string_view text);
std::string schedule_to_json(const TrialSchedule& schedule);

}  // namespace objrec

#include "objrec/rng.hpp"

template <typename T>
void objrec::seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  const CounterRng rng(seed);
  std::uint64_t counter = 0;
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i, counter));
    std::swap(items[i - 1], items[j]);
  }
}
