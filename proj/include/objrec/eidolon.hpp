#pragma once

#include <cstdint>
#include <vector>

#include "objrec/image.hpp"

namespace objrec::eidolon {

/// Decomposition defaults: 10 DoG levels, sigma_0 = 1, ratio sqrt(2).
struct ScaleSpaceConfig {
  int num_levels = 10;
  double sigma0 = 1.0;
  double sigma_ratio = 1.4142135623730951;
};

/// Band-pass DoG levels plus a low-pass residual. Level k is
/// G(sigma_{k-1}) - G(sigma_k) with G(sigma_{-1}) the image itself, so the
/// elementwise sum of levels and residual telescopes back to the source.
struct ScaleSpaceStack {
  std::vector<Image> levels;
  std::vector<double> sigmas;  ///< sigmas[k]: outer (larger) scale of level k
  Image residual;              ///< G(sigmas.back())

  Image reconstruct() const;
};

ScaleSpaceStack build_scale_space(const Image& img, int num_levels, double sigma_ratio,
                                  double sigma0 = 1.0);
ScaleSpaceStack build_scale_space(const Image& img, const ScaleSpaceConfig& config = {});

struct DisplacementField {
  Image dx;
  Image dy;
  double grain = 0.0;
  double reach = 0.0;

  /// sqrt(mean(dx^2 + dy^2)).
  double rms() const;
};

/// Gaussian white noise per component, blurred with sigma = grain, rescaled
/// to vector RMS = reach.
DisplacementField displacement_field(int width, int height, double grain, double reach,
                                     std::uint64_t seed);

/// Displaces every scale-space level k through
/// sqrt(coherence) * shared + sqrt(1 - coherence) * independent_k,
/// sums the displaced levels with the residual and clips to [0,1].
Image partially_coherent_disarray(const Image& img, double reach, double coherence,
                                  double grain, std::uint64_t seed,
                                  const ScaleSpaceConfig& config = {});

/// The shared field used by partially_coherent_disarray for a given seed.
DisplacementField shared_field(int width, int height, double grain, double reach,
                               std::uint64_t seed);

/// Precomputed decomposition and unit-reach fields for one
/// (image, coherence, grain, seed); render() then costs one warp per level.
/// render(r) is identical to partially_coherent_disarray(img, r, ...).
class DisarrayPlan {
 public:
  DisarrayPlan(const Image& img, double coherence, double grain, std::uint64_t seed,
               const ScaleSpaceConfig& config = {});

  Image render(double reach) const;

  const ScaleSpaceStack& stack() const noexcept { return stack_; }

 private:
  ScaleSpaceStack stack_;
  std::vector<DisplacementField> fields_;  ///< per level, mixed, unit reach
};

}  // namespace objrec::eidolon
