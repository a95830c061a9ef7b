#include "objrec/image.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "objrec/error.hpp"

namespace objrec {

namespace {

std::size_t checked_size(int width, int height, int planes) {
  if (width < 0 || height < 0) {
    throw Error(ErrorKind::InvalidInput, "image dimensions must be non-negative");
  }
  if (planes != 1 && planes != 3) {
    throw Error(ErrorKind::InvalidInput, "image planes must be 1 or 3");
  }
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
         static_cast<std::size_t>(planes);
}

}  // namespace

Image::Image(int width, int height, int planes, double fill)
    : width_(width), height_(height), planes_(planes),
      data_(checked_size(width, height, planes), fill) {}

Image::Image(int width, int height, int planes, std::vector<double> data)
    : width_(width), height_(height), planes_(planes), data_(std::move(data)) {
  if (data_.size() != checked_size(width, height, planes)) {
    throw Error(ErrorKind::InvalidInput, "image data length does not match width*height*planes");
  }
}

bool Image::in_unit_range() const noexcept {
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

double Image::mean() const noexcept {
  if (data_.empty()) return 0.0;
  return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

double rms_difference(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.planes() != b.planes()) {
    throw Error(ErrorKind::InvalidInput, "rms_difference: image shapes differ");
  }
  if (a.empty()) return 0.0;
  double acc = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(da.size()));
}

}  // namespace objrec
