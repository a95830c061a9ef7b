#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace objrec {

/// Interleaved row-major intensity image, samples nominally in [0,1].
/// planes is 1 (grayscale) or 3 (RGB).
class Image {
 public:
  Image() = default;
  Image(int width, int height, int planes, double fill = 0.0);
  Image(int width, int height, int planes, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int planes() const noexcept { return planes_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int plane = 0) noexcept {
    return data_[index(x, y, plane)];
  }
  double at(int x, int y, int plane = 0) const noexcept {
    return data_[index(x, y, plane)];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// True when every sample lies in [0,1].
  bool in_unit_range() const noexcept;
  double mean() const noexcept;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int plane) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(planes_) +
           static_cast<std::size_t>(plane);
  }

  int width_ = 0;
  int height_ = 0;
  int planes_ = 1;
  std::vector<double> data_;
};

/// Root-mean-square difference between two images of identical shape.
double rms_difference(const Image& a, const Image& b);

}  // namespace objrec
