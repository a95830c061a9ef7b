#include "objrec/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "objrec/error.hpp"

namespace objrec {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidParameter, "gaussian sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace kernels {

using Index = std::ptrdiff_t;

void luma(std::span<const double> rgb, std::span<double> out) {
  const auto n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const double* p = rgb.data() + 3 * i;
    out[i] = 0.2125 * p[0] + 0.7154 * p[1] + 0.0721 * p[2];
  }
}

void affine(std::span<const double> in, std::span<double> out, double gain, double offset) {
  const auto n = static_cast<Index>(in.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) out[i] = gain * in[i] + offset;
}

std::size_t add_uniform_noise(std::span<const double> in, std::span<double> out, double w,
                              const CounterRng& rng) {
  const auto n = static_cast<Index>(in.size());
  std::size_t clipped = 0;
#pragma omp parallel for schedule(static) reduction(+ : clipped)
  for (Index i = 0; i < n; ++i) {
    const double u = -w + 2.0 * w * rng.uniform01(static_cast<std::uint64_t>(i));
    double v = in[i] + u;
    if (v < 0.0) {
      v = 0.0;
      ++clipped;
    } else if (v > 1.0) {
      v = 1.0;
      ++clipped;
    }
    out[i] = v;
  }
  return clipped;
}

void gaussian_noise(std::span<double> out, const CounterRng& rng) {
  const auto n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) out[i] = rng.normal(static_cast<std::uint64_t>(i));
}

Image gaussian_blur(const Image& plane, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = plane.width();
  const int h = plane.height();
  Image tmp(w, h, 1);
  Image out(w, h, 1);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        acc += k[static_cast<std::size_t>(j + radius)] * plane.at(reflect_index(x + j, w), y);
      }
      tmp.at(x, y) = acc;
    }
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        acc += k[static_cast<std::size_t>(j + radius)] * tmp.at(x, reflect_index(y + j, h));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

Image bilinear_warp(const Image& plane, const Image& dx, const Image& dy) {
  const int w = plane.width();
  const int h = plane.height();
  Image out(w, h, 1);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = x + dx.at(x, y);
      const double sy = y + dy.at(x, y);
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const double ax = sx - fx;
      const double ay = sy - fy;
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const int xa = reflect_index(x0, w), xb = reflect_index(x0 + 1, w);
      const int ya = reflect_index(y0, h), yb = reflect_index(y0 + 1, h);
      const double top = (1.0 - ax) * plane.at(xa, ya) + ax * plane.at(xb, ya);
      const double bottom = (1.0 - ax) * plane.at(xa, yb) + ax * plane.at(xb, yb);
      out.at(x, y) = (1.0 - ay) * top + ay * bottom;
    }
  }
  return out;
}

}  // namespace kernels
}  // namespace objrec
