#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "objrec/categories.hpp"
#include "objrec/codec.hpp"
#include "objrec/dataset.hpp"
#include "objrec/image.hpp"
#include "objrec/rng.hpp"

namespace objrec::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "objrec-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) std::abort();
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Image random_image(int w, int h, int planes, std::uint64_t seed) {
  Image img(w, h, planes);
  const CounterRng rng(seed);
  auto d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = rng.uniform01(i);
  return img;
}

/// Smooth colour image with structure at several scales.
inline Image textured_image(int w, int h, std::uint64_t seed) {
  Image img(w, h, 3);
  const CounterRng rng(seed);
  const double fx = 2.0 + 6.0 * rng.uniform01(0), fy = 2.0 + 6.0 * rng.uniform01(1);
  const double ph = 6.283 * rng.uniform01(2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / w, v = static_cast<double>(y) / h;
      const double base = 0.5 + 0.25 * std::sin(6.283 * fx * u + ph) * std::cos(6.283 * fy * v);
      const double fine = 0.15 * (rng.uniform01(100 + static_cast<std::uint64_t>(y * w + x)) - 0.5);
      const double edge = (x > w / 3 && x < 2 * w / 3 && y > h / 3 && y < 2 * h / 3) ? 0.2 : 0.0;
      for (int p = 0; p < 3; ++p) {
        img.at(x, y, p) = std::clamp(base + fine + edge + 0.05 * (p - 1), 0.0, 1.0);
      }
    }
  }
  return img;
}

/// First WNID the built-in map assigns to a category.
inline std::string wnid_of(Category c) {
  for (const auto& e : CategoryMap::builtin().entries()) {
    if (e.category == c) return e.wnid;
  }
  return {};
}

/// Pool records without files: per_category images for every category.
inline StimulusPool record_pool(int per_category) {
  StimulusPool pool;
  for (Category c : kAllCategories) {
    for (int i = 0; i < per_category; ++i) {
      PoolRecord r;
      r.image_id = std::string(category_name(c)) + "_" + std::to_string(i);
      r.wnid = wnid_of(c);
      r.category = c;
      r.path = "/nonexistent/" + r.image_id + ".png";
      r.mean = 0.5;
      pool.records.push_back(r);
    }
  }
  return pool;
}

/// Pool backed by small random PNGs written under dir, with a manifest.
inline StimulusPool file_pool(const std::filesystem::path& dir, int per_category, int size = 8) {
  StimulusPool pool = record_pool(per_category);
  std::uint64_t seed = 1;
  for (auto& r : pool.records) {
    r.path = dir / (r.image_id + ".png");
    const Image img = random_image(size, size, 3, seed++);
    save_image(r.path, img);
    r.mean = img.mean();
  }
  write_manifest(dir / "manifest.csv", pool);
  return pool;
}

}  // namespace objrec::testing
