#pragma once

// Pixel kernels. objrec::kernels holds the OpenMP versions used by the
// library; objrec::reference holds straightforward serial versions kept as
// the test oracle and benchmark baseline. Both produce bit-identical output.

#include <cstddef>
#include <span>
#include <vector>

#include "objrec/image.hpp"
#include "objrec/rng.hpp"

namespace objrec {

/// Reflect an index into [0, n) with half-sample symmetry (d c b a | a b c d).
inline int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

/// Normalized sampled Gaussian, radius ceil(4 sigma).
std::vector<double> gaussian_kernel(double sigma);

namespace kernels {

void luma(std::span<const double> rgb, std::span<double> out);
void affine(std::span<const double> in, std::span<double> out, double gain, double offset);
/// Returns the number of clipped samples.
std::size_t add_uniform_noise(std::span<const double> in, std::span<double> out, double w,
                              const CounterRng& rng);
void gaussian_noise(std::span<double> out, const CounterRng& rng);
/// Separable blur with reflective borders; single-plane input.
Image gaussian_blur(const Image& plane, double sigma);
/// Backward warp: out(x, y) = plane(x + dx, y + dy), bilinear, reflective.
Image bilinear_warp(const Image& plane, const Image& dx, const Image& dy);

}  // namespace kernels

namespace reference {

void luma(std::span<const double> rgb, std::span<double> out);
void affine(std::span<const double> in, std::span<double> out, double gain, double offset);
std::size_t add_uniform_noise(std::span<const double> in, std::span<double> out, double w,
                              const CounterRng& rng);
void gaussian_noise(std::span<double> out, const CounterRng& rng);
Image gaussian_blur(const Image& plane, double sigma);
Image bilinear_warp(const Image& plane, const Image& dx, const Image& dy);

}  // namespace reference

}  // namespace objrec
