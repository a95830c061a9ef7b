#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objrec/image.hpp"

namespace objrec {

enum class DegradationKind { Colour, Grayscale, Contrast, Noise, Eidolon };

/// Tagged condition descriptor. Only the fields of the active kind matter.
struct DegradationSpec {
  DegradationKind kind = DegradationKind::Colour;
  double contrast = 100.0;  ///< percent, Contrast
  double noise_width = 0.0; ///< half-range w, Noise
  double reach = 0.0;       ///< pixels, Eidolon
  double coherence = 1.0;   ///< [0,1], Eidolon
  double grain = 10.0;      ///< pixels, Eidolon
  std::uint64_t seed = 0;   ///< Noise and Eidolon

  static DegradationSpec colour() { return {}; }
  static DegradationSpec grayscale() { return {.kind = DegradationKind::Grayscale}; }
  static DegradationSpec contrast_level(double c) {
    return {.kind = DegradationKind::Contrast, .contrast = c};
  }
  static DegradationSpec noise(double w, std::uint64_t seed = 0) {
    return {.kind = DegradationKind::Noise, .noise_width = w, .seed = seed};
  }
  static DegradationSpec eidolon(double reach, double coherence, double grain = 10.0,
                                 std::uint64_t seed = 0) {
    return {.kind = DegradationKind::Eidolon,
            .reach = reach,
            .coherence = coherence,
            .grain = grain,
            .seed = seed};
  }

  bool uses_seed() const noexcept {
    return kind == DegradationKind::Noise || kind == DegradationKind::Eidolon;
  }

  /// Canonical condition string without the seed:
  /// "colour", "grayscale", "c30", "noise_w0.35", "e_r8_c1.0_g10".
  std::string condition() const;

  /// The scalar that orders conditions by signal strength within a kind
  /// (contrast c, noise w, eidolon reach; 0 for colour/grayscale).
  double level() const noexcept;

  /// Parses canonical strings and the published raw-data condition tokens
  /// ("cr"/"bw", "c05", "0.35", "8-10-10"). Bare numbers need kind_hint.
  static DegradationSpec parse(std::string_view condition,
                               std::optional<DegradationKind> kind_hint = std::nullopt);

  friend bool operator==(const DegradationSpec&, const DegradationSpec&) = default;
};

/// Shortest round-trip decimal rendering ("0.35", "8", "0.1").
std::string format_number(double v);

// -- Operations -------------------------------------------------------------

/// Rec.-709 luma on stored values: 0.2125 R + 0.7154 G + 0.0721 B.
Image to_grayscale(const Image& rgb);

/// v -> (c/100) v + (1 - c/100) / 2 for every sample.
Image scale_contrast(const Image& img, double contrast_percent);

struct NoiseResult {
  Image image;
  std::size_t clipped = 0;  ///< samples that left [0,1] and were clipped
};

/// Adds independent Uniform[-w, w] noise per sample and clips to [0,1].
/// Intended for single-plane stimuli; 3-plane input gets independent draws
/// per plane.
NoiseResult add_uniform_noise_counted(const Image& img, double w, std::uint64_t seed);
Image add_uniform_noise(const Image& img, double w, std::uint64_t seed);

/// Full-contrast 1/f noise, normalized to span exactly [0,1].
Image pink_noise_mask(int width, int height, std::uint64_t seed);

/// Applies one condition to a colour source image following the stimulus
/// pipeline: grayscale conversion for all kinds but Colour, 30% contrast
/// before noise, eidolon disarray on the grayscale image.
Image make_stimulus(const Image& source, const DegradationSpec& spec);

/// Stimulus filename, e.g. "{id}_noise_w0.35_s{seed}.png".
std::string stimulus_filename(std::string_view image_id, const DegradationSpec& spec,
                              std::string_view extension = "png");

}  // namespace objrec
