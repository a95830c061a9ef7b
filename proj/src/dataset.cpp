#include "objrec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "objrec/codec.hpp"
#include "objrec/error.hpp"
#include "objrec/util.hpp"

namespace objrec {

// -- Pool ---------------------------------------------------------------------

std::array<int, kNumCategories> StimulusPool::category_counts() const {
  std::array<int, kNumCategories> counts{};
  for (const auto& r : records) ++counts[static_cast<std::size_t>(category_index(r.category))];
  return counts;
}

std::vector<const PoolRecord*> StimulusPool::of_category(Category c) const {
  std::vector<const PoolRecord*> out;
  for (const auto& r : records) {
    if (r.category == c) out.push_back(&r);
  }
  return out;
}

bool is_grayscale_source(const Image& img) noexcept {
  if (img.planes() == 1) return true;
  const auto d = img.data();
  for (std::size_t i = 0; i + 2 < d.size(); i += 3) {
    if (d[i] != d[i + 1] || d[i] != d[i + 2]) return false;
  }
  return true;
}

Image center_square_crop(const Image& img) {
  const int side = std::min(img.width(), img.height());
  const int x0 = (img.width() - side) / 2;
  const int y0 = (img.height() - side) / 2;
  Image out(side, side, img.planes());
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      for (int p = 0; p < img.planes(); ++p) out.at(x, y, p) = img.at(x0 + x, y0 + y, p);
    }
  }
  return out;
}

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double lanczos3(double x) {
  if (x <= -3.0 || x >= 3.0) return 0.0;
  return sinc(x) * sinc(x / 3.0);
}

struct Taps {
  int first = 0;
  std::vector<double> weights;
};

/// Filter taps for one output coordinate along an axis of length in_size.
std::vector<Taps> resample_taps(int in_size, int out_size) {
  const double scale = static_cast<double>(in_size) / out_size;
  const double filter_scale = std::max(scale, 1.0);
  const double support = 3.0 * filter_scale;
  std::vector<Taps> taps(static_cast<std::size_t>(out_size));
  for (int i = 0; i < out_size; ++i) {
    const double centre = (i + 0.5) * scale;
    const int lo = std::max(0, static_cast<int>(std::floor(centre - support)));
    const int hi = std::min(in_size, static_cast<int>(std::ceil(centre + support)));
    Taps& t = taps[static_cast<std::size_t>(i)];
    t.first = lo;
    double sum = 0.0;
    for (int j = lo; j < hi; ++j) {
      const double w = lanczos3((j + 0.5 - centre) / filter_scale);
      t.weights.push_back(w);
      sum += w;
    }
    if (sum != 0.0) {
      for (double& w : t.weights) w /= sum;
    }
  }
  return taps;
}

}  // namespace

Image resize_antialias(const Image& img, int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::InvalidParameter, "resize target must be at least 1x1");
  }
  const int planes = img.planes();
  const auto xtaps = resample_taps(img.width(), width);
  const auto ytaps = resample_taps(img.height(), height);

  Image horizontal(width, img.height(), planes);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      const Taps& t = xtaps[static_cast<std::size_t>(x)];
      for (int p = 0; p < planes; ++p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.weights.size(); ++k) {
          acc += t.weights[k] * img.at(t.first + static_cast<int>(k), y, p);
        }
        horizontal.at(x, y, p) = acc;
      }
    }
  }
  Image out(width, height, planes);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    const Taps& t = ytaps[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      for (int p = 0; p < planes; ++p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.weights.size(); ++k) {
          acc += t.weights[k] * horizontal.at(x, t.first + static_cast<int>(k), p);
        }
        out.at(x, y, p) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<std::size_t> luminance_outliers(std::span<const double> means, double k) {
  std::vector<std::size_t> out;
  if (means.empty()) return out;
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(means.size());
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  const double sd = std::sqrt(var / static_cast<double>(means.size()));
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (std::abs(means[i] - mean) > k * sd) out.push_back(i);
  }
  return out;
}

StimulusPool preprocess_pool(std::span<const RawImage> raw, const CategoryMap& map,
                             const PoolOptions& options, PoolReport* report) {
  enum class Outcome { Unmapped, Grayscale, TooSmall, Kept, Failed };
  struct Slot {
    Outcome outcome = Outcome::Failed;
    PoolRecord record;
    std::string error;
  };
  std::vector<Slot> slots(raw.size());
  const auto n = static_cast<std::ptrdiff_t>(raw.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const RawImage& src = raw[static_cast<std::size_t>(i)];
    Slot& slot = slots[static_cast<std::size_t>(i)];
    try {
      const auto category = map.map_wnid(src.wnid);
      if (!category) {
        slot.outcome = Outcome::Unmapped;
        continue;
      }
      const Image img = load_image(src.path);
      if (is_grayscale_source(img)) {
        slot.outcome = Outcome::Grayscale;
        continue;
      }
      if (img.width() < options.size || img.height() < options.size) {
        slot.outcome = Outcome::TooSmall;
        continue;
      }
      const Image patch = resize_antialias(center_square_crop(img), options.size, options.size);
      slot.record.image_id = src.image_id;
      slot.record.wnid = src.wnid;
      slot.record.category = *category;
      slot.record.path = options.output_dir / (src.image_id + ".png");
      slot.record.mean = to_grayscale(patch).mean();
      save_image(slot.record.path, patch);
      slot.outcome = Outcome::Kept;
    } catch (const std::exception& e) {
      slot.outcome = Outcome::Failed;
      slot.error = src.path.string() + ": " + e.what();
    }
  }

  PoolReport rep;
  rep.input = static_cast<int>(raw.size());
  StimulusPool pool;
  for (auto& slot : slots) {
    switch (slot.outcome) {
      case Outcome::Unmapped: ++rep.unmapped; break;
      case Outcome::Grayscale: ++rep.grayscale; break;
      case Outcome::TooSmall: ++rep.too_small; break;
      case Outcome::Failed: throw Error(ErrorKind::Io, slot.error);
      case Outcome::Kept: pool.records.push_back(std::move(slot.record)); break;
    }
  }

  std::vector<double> means;
  means.reserve(pool.records.size());
  for (const auto& r : pool.records) means.push_back(r.mean);
  const auto outliers = luminance_outliers(means, options.max_sd);
  std::vector<bool> drop(pool.records.size(), false);
  for (auto i : outliers) drop[i] = true;
  std::vector<PoolRecord> kept;
  for (std::size_t i = 0; i < pool.records.size(); ++i) {
    if (drop[i]) {
      std::error_code ec;
      std::filesystem::remove(pool.records[i].path, ec);
    } else {
      kept.push_back(std::move(pool.records[i]));
    }
  }
  pool.records = std::move(kept);
  rep.luminance_outliers = static_cast<int>(outliers.size());
  rep.retained = static_cast<int>(pool.records.size());
  if (report) *report = rep;

  if (options.require_all_categories) {
    const auto counts = pool.category_counts();
    for (Category c : kAllCategories) {
      if (counts[static_cast<std::size_t>(category_index(c))] == 0) {
        throw Error(ErrorKind::PoolConstruction,
                    "category '" + std::string(category_name(c)) + "' is empty after filtering");
      }
    }
  }
  return pool;
}

void write_manifest(const std::filesystem::path& path, const StimulusPool& pool) {
  std::ostringstream out;
  out << "image_id,wnid,category,path,mean\n";
  for (const auto& r : pool.records) {
    char mean[32];
    std::snprintf(mean, sizeof(mean), "%.10g", r.mean);
    out << csv_field(r.image_id) << ',' << r.wnid << ',' << category_name(r.category) << ','
        << csv_field(r.path.string()) << ',' << mean << '\n';
  }
  write_text_file(path, out.str());
}

StimulusPool read_manifest(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  StimulusPool pool;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() < 5) {
      throw Error(ErrorKind::InvalidInput,
                  path.string() + ":" + std::to_string(line_no) + ": expected 5 fields");
    }
    auto cat = parse_category(f[2]);
    auto mean = parse_double(f[4]);
    if (!cat || !mean) {
      throw Error(ErrorKind::InvalidInput,
                  path.string() + ":" + std::to_string(line_no) + ": bad category or mean");
    }
    std::filesystem::path p = f[3];
    if (p.is_relative()) p = path.parent_path() / p;
    pool.records.push_back({f[0], f[1], *cat, p, *mean});
  }
  return pool;
}

// -- Schedules ----------------------------------------------------------------

int TrialSchedule::practice_count() const {
  return static_cast<int>(std::count_if(trials.begin(), trials.end(),
                                        [](const Trial& t) { return t.is_practice; }));
}

int TrialSchedule::main_count() const {
  return static_cast<int>(trials.size()) - practice_count();
}

std::vector<int> TrialSchedule::break_positions() const {
  std::vector<int> out;
  int main_seen = 0;
  for (const auto& t : trials) {
    if (t.is_practice) continue;
    ++main_seen;
    if (t.break_after) out.push_back(main_seen);
  }
  return out;
}

std::uint64_t stimulus_seed(std::uint64_t session_seed, std::string_view image_id,
                            const DegradationSpec& condition) {
  DegradationSpec unseeded = condition;
  unseeded.seed = 0;
  return derive_seed(derive_seed(session_seed, image_id), unseeded.condition());
}

namespace {

DegradationSpec seeded(DegradationSpec spec, std::uint64_t seed, std::string_view image_id) {
  if (spec.uses_seed()) spec.seed = stimulus_seed(seed, image_id, spec);
  return spec;
}

}  // namespace

std::vector<TrialSchedule> plan_experiment(const StimulusPool& pool, ExperimentKind kind,
                                           std::uint64_t seed, const PlanOptions& options) {
  const auto conditions = experiment_conditions(kind);
  const int sessions = session_count(kind);
  const int per_session = options.images_per_category;
  const int per_category = per_session * sessions;
  const int num_conditions = static_cast<int>(conditions.size());
  if (per_session < 1 || per_category % num_conditions != 0) {
    throw Error(ErrorKind::InvalidParameter,
                "images per category (" + std::to_string(per_category) +
                    ") is not a multiple of the condition count (" +
                    std::to_string(num_conditions) + ")");
  }
  const int practice_per_category =
      (options.practice_trials * sessions + kNumCategories - 1) / kNumCategories;

  struct Slot {
    const PoolRecord* image;
    int condition;
  };
  // slots[session][category-major list]
  std::vector<std::vector<Slot>> main_slots(static_cast<std::size_t>(sessions));
  std::vector<const PoolRecord*> practice_images;

  for (Category cat : kAllCategories) {
    auto images = pool.of_category(cat);
    std::sort(images.begin(), images.end(),
              [](const PoolRecord* a, const PoolRecord* b) { return a->image_id < b->image_id; });
    const int need = per_category + practice_per_category;
    if (static_cast<int>(images.size()) < need) {
      throw Error(ErrorKind::Capacity, "category '" + std::string(category_name(cat)) +
                                           "' has " + std::to_string(images.size()) +
                                           " images, experiment needs " + std::to_string(need));
    }
    const std::string tag(category_name(cat));
    seeded_shuffle(images, derive_seed(seed, "images/" + tag));

    // Condition order permuted per category; session s takes a contiguous
    // slice of the cyclic sequence, so each condition appears equally often
    // over the experiment and within one of each other per session.
    std::vector<int> order(static_cast<std::size_t>(num_conditions));
    for (int c = 0; c < num_conditions; ++c) order[static_cast<std::size_t>(c)] = c;
    seeded_shuffle(order, derive_seed(seed, "conditions/" + tag));
    for (int i = 0; i < per_category; ++i) {
      const int session = i / per_session;
      main_slots[static_cast<std::size_t>(session)].push_back(
          {images[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i % num_conditions)]});
    }
    for (int i = per_category; i < need; ++i) practice_images.push_back(images[static_cast<std::size_t>(i)]);
  }
  seeded_shuffle(practice_images, derive_seed(seed, "practice"));

  std::vector<TrialSchedule> schedules;
  std::size_t practice_cursor = 0;
  for (int s = 0; s < sessions; ++s) {
    TrialSchedule sched;
    sched.experiment = kind;
    sched.session = s;
    sched.seed = seed;
    sched.break_every = break_interval(kind);

    for (int p = 0; p < options.practice_trials; ++p) {
      const PoolRecord* img = practice_images[practice_cursor++];
      const auto& cond = conditions[static_cast<std::size_t>(
          CounterRng(derive_seed(seed, "practice-conditions")).bits(practice_cursor) %
          static_cast<std::uint64_t>(num_conditions))];
      Trial t;
      t.image_id = img->image_id;
      t.category = img->category;
      t.condition = seeded(cond, seed, img->image_id);
      t.is_practice = true;
      sched.trials.push_back(std::move(t));
    }

    auto slots = main_slots[static_cast<std::size_t>(s)];
    seeded_shuffle(slots, derive_seed(seed, "order/" + std::to_string(s)));
    const int main_total = static_cast<int>(slots.size());
    for (int k = 0; k < main_total; ++k) {
      const Slot& slot = slots[static_cast<std::size_t>(k)];
      Trial t;
      t.image_id = slot.image->image_id;
      t.category = slot.image->category;
      t.condition = seeded(conditions[static_cast<std::size_t>(slot.condition)], seed,
                           slot.image->image_id);
      t.break_after = (k + 1) % sched.break_every == 0 && k + 1 < main_total;
      sched.trials.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < sched.trials.size(); ++i) {
      sched.trials[i].index = static_cast<int>(i);
    }
    schedules.push_back(std::move(sched));
  }
  return schedules;
}

TrialSchedule plan_session(const StimulusPool& pool, ExperimentKind kind, std::uint64_t seed,
                           int session, const PlanOptions& options) {
  auto all = plan_experiment(pool, kind, seed, options);
  if (session < 0 || session >= static_cast<int>(all.size())) {
    throw Error(ErrorKind::InvalidParameter,
                "session " + std::to_string(session) + " out of range for " +
                    std::string(experiment_name(kind)));
  }
  return std::move(all[static_cast<std::size_t>(session)]);
}

std::filesystem::path stimulus_path(const std::filesystem::path& dir, const Trial& trial) {
  return dir / stimulus_filename(trial.image_id, trial.condition);
}

std::vector<std::filesystem::path> render_stimuli(const StimulusPool& pool,
                                                  const TrialSchedule& schedule,
                                                  const std::filesystem::path& dir) {
  std::map<std::string, const PoolRecord*, std::less<>> by_id;
  for (const auto& r : pool.records) by_id.emplace(r.image_id, &r);

  std::vector<std::filesystem::path> paths;
  std::vector<const PoolRecord*> sources;
  for (const auto& t : schedule.trials) {
    const auto it = by_id.find(t.image_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::NotFound, "image '" + t.image_id + "' is not in the pool");
    }
    paths.push_back(stimulus_path(dir, t));
    sources.push_back(it->second);
  }
  std::filesystem::create_directories(dir);

  std::vector<std::string> errors(paths.size());
  const auto n = static_cast<std::ptrdiff_t>(paths.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (std::filesystem::exists(paths[k])) continue;
    try {
      const Image src = load_image(sources[k]->path);
      save_image(paths[k], make_stimulus(src, schedule.trials[k].condition));
    } catch (const std::exception& e) {
      errors[k] = paths[k].string() + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorKind::Io, e);
  }
  return paths;
}

std::string schedule_to_csv(const TrialSchedule& schedule) {
  std::ostringstream out;
  out << "# experiment=" << experiment_name(schedule.experiment)
      << " session=" << schedule.session << " seed=" << schedule.seed
      << " break_every=" << schedule.break_every << '\n';
  out << "trial_index,image_id,category,condition_string,is_practice,break_after\n";
  for (const auto& t : schedule.trials) {
    out << t.index << ',' << csv_field(t.image_id) << ',' << category_name(t.category) << ','
        << t.condition.condition() << ',' << (t.is_practice ? "true" : "false") << ','
        << (t.break_after ? "true" : "false") << '\n';
  }
  return out.str();
}

TrialSchedule schedule_from_csv(std::string_view text) {
  TrialSchedule sched;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  int line_no = 0;
  auto bad = [&](const std::string& why) {
    return Error(ErrorKind::InvalidInput, "schedule line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto tl = trim(line);
    if (tl.empty()) continue;
    if (tl.front() == '#') {
      std::istringstream meta{std::string(tl.substr(1))};
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const auto value = kv.substr(eq + 1);
        if (key == "experiment") {
          auto k = parse_experiment(value);
          if (!k) throw bad("unknown experiment '" + value + "'");
          sched.experiment = *k;
        } else if (key == "session") {
          sched.session = static_cast<int>(parse_int(value).value_or(0));
        } else if (key == "seed") {
          sched.seed = std::stoull(value);
        } else if (key == "break_every") {
          sched.break_every = static_cast<int>(parse_int(value).value_or(256));
        }
      }
      continue;
    }
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_line(tl);
    if (f.size() < 6) throw bad("expected 6 fields");
    Trial t;
    auto idx = parse_int(f[0]);
    auto cat = parse_category(f[2]);
    if (!idx || !cat) throw bad("bad trial index or category");
    t.index = static_cast<int>(*idx);
    t.image_id = f[1];
    t.category = *cat;
    t.condition = seeded(DegradationSpec::parse(f[3], condition_hint(sched.experiment)),
                         sched.seed, t.image_id);
    t.is_practice = f[4] == "true" || f[4] == "1";
    t.break_after = f[5] == "true" || f[5] == "1";
    sched.trials.push_back(std::move(t));
  }
  return sched;
}

std::string schedule_to_json(const TrialSchedule& schedule) {
  nlohmann::ordered_json j;
  j["experiment"] = experiment_name(schedule.experiment);
  j["session"] = schedule.session;
  j["seed"] = schedule.seed;
  j["break_every"] = schedule.break_every;
  auto& trials = j["trials"] = nlohmann::ordered_json::array();
  for (const auto& t : schedule.trials) {
    trials.push_back({{"trial_index", t.index},
                      {"image_id", t.image_id},
                      {"category", category_name(t.category)},
                      {"condition_string", t.condition.condition()},
                      {"stimulus", stimulus_filename(t.image_id, t.condition)},
                      {"is_practice", t.is_practice},
                      {"break_after", t.break_after}});
  }
  return j.dump(2);
}

}  // namespace objrec
