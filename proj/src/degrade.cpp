#include "objrec/degrade.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>

#include "objrec/eidolon.hpp"
#include "objrec/error.hpp"
#include "objrec/kernels.hpp"
#include "objrec/rng.hpp"
#include "objrec/util.hpp"

namespace objrec {

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

std::string format_coherence(double c) {
  std::string s = format_number(c);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
  return s;
}

double require_number(std::string_view token, std::string_view condition) {
  auto v = parse_double(token);
  if (!v) {
    throw Error(ErrorKind::InvalidInput,
                "cannot parse condition '" + std::string(condition) + "'");
  }
  return *v;
}

}  // namespace

std::string DegradationSpec::condition() const {
  switch (kind) {
    case DegradationKind::Colour: return "colour";
    case DegradationKind::Grayscale: return "grayscale";
    case DegradationKind::Contrast: return "c" + format_number(contrast);
    case DegradationKind::Noise: return "noise_w" + format_number(noise_width);
    case DegradationKind::Eidolon:
      return "e_r" + format_number(reach) + "_c" + format_coherence(coherence) + "_g" +
             format_number(grain);
  }
  return {};
}

double DegradationSpec::level() const noexcept {
  switch (kind) {
    case DegradationKind::Contrast: return contrast;
    case DegradationKind::Noise: return noise_width;
    case DegradationKind::Eidolon: return reach;
    default: return 0.0;
  }
}

DegradationSpec DegradationSpec::parse(std::string_view condition,
                                       std::optional<DegradationKind> kind_hint) {
  const std::string_view s = trim(condition);
  if (s == "colour" || s == "color" || s == "cr") return colour();
  if (s == "grayscale" || s == "greyscale" || s == "bw") return grayscale();
  if (s.starts_with("noise_w")) return noise(require_number(s.substr(7), s));
  if (s.starts_with("e_r")) {
    const auto c_pos = s.find("_c");
    const auto g_pos = s.find("_g");
    if (c_pos == std::string_view::npos || g_pos == std::string_view::npos || g_pos < c_pos) {
      throw Error(ErrorKind::InvalidInput, "cannot parse condition '" + std::string(s) + "'");
    }
    return eidolon(require_number(s.substr(3, c_pos - 3), s),
                   require_number(s.substr(c_pos + 2, g_pos - c_pos - 2), s),
                   require_number(s.substr(g_pos + 2), s));
  }
  if (s.size() > 1 && s.front() == 'c' && parse_double(s.substr(1))) {
    return contrast_level(*parse_double(s.substr(1)));
  }
  // Published eidolon token: reach-coherence*10-grain.
  if (std::count(s.begin(), s.end(), '-') == 2 && !s.starts_with("-")) {
    const auto a = s.find('-');
    const auto b = s.find('-', a + 1);
    return eidolon(require_number(s.substr(0, a), s),
                   require_number(s.substr(a + 1, b - a - 1), s) / 10.0,
                   require_number(s.substr(b + 1), s));
  }
  if (auto v = parse_double(s)) {
    if (kind_hint == DegradationKind::Noise) return noise(*v);
    if (kind_hint == DegradationKind::Contrast) return contrast_level(*v);
    throw Error(ErrorKind::InvalidInput, "bare numeric condition '" + std::string(s) +
                                             "' needs an experiment kind");
  }
  throw Error(ErrorKind::InvalidInput, "cannot parse condition '" + std::string(s) + "'");
}

Image to_grayscale(const Image& rgb) {
  if (rgb.planes() != 3) {
    throw Error(ErrorKind::InvalidInput, "to_grayscale expects a 3-plane image");
  }
  Image out(rgb.width(), rgb.height(), 1);
  kernels::luma(rgb.data(), out.data());
  return out;
}

Image scale_contrast(const Image& img, double contrast_percent) {
  if (!(contrast_percent > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "contrast must be > 0 percent");
  }
  if (contrast_percent == 100.0) return img;
  const double gain = contrast_percent / 100.0;
  Image out(img.width(), img.height(), img.planes());
  kernels::affine(img.data(), out.data(), gain, (1.0 - gain) / 2.0);
  return out;
}

NoiseResult add_uniform_noise_counted(const Image& img, double w, std::uint64_t seed) {
  if (!(w >= 0.0)) throw Error(ErrorKind::InvalidParameter, "noise width must be >= 0");
  if (w == 0.0) return {img, 0};
  NoiseResult result{Image(img.width(), img.height(), img.planes()), 0};
  result.clipped = kernels::add_uniform_noise(img.data(), result.image.data(), w, CounterRng(seed));
  return result;
}

Image add_uniform_noise(const Image& img, double w, std::uint64_t seed) {
  return add_uniform_noise_counted(img, w, seed).image;
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

int signed_frequency(int k, int n) noexcept { return k <= n / 2 ? k : k - n; }

}  // namespace

Image pink_noise_mask(int width, int height, std::uint64_t seed) {
  if (width < 2 || height < 2) {
    throw Error(ErrorKind::InvalidParameter, "pink noise mask needs width, height >= 2");
  }
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::unique_ptr<fftw_complex[], FftwFree> spectrum(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
  std::unique_ptr<fftw_complex[], FftwFree> field(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));

  const CounterRng rng(seed);
  for (int ky = 0; ky < height; ++ky) {
    for (int kx = 0; kx < width; ++kx) {
      const std::size_t idx = static_cast<std::size_t>(ky) * width + kx;
      const int my = (height - ky) % height;
      const int mx = (width - kx) % width;
      const std::size_t mirror = static_cast<std::size_t>(my) * width + mx;
      const double fy = static_cast<double>(signed_frequency(ky, height)) / height;
      const double fx = static_cast<double>(signed_frequency(kx, width)) / width;
      const double f = std::hypot(fx, fy);
      if (f == 0.0) {
        spectrum[idx][0] = spectrum[idx][1] = 0.0;
        continue;
      }
      // Phases are drawn on the canonical member of each conjugate pair so
      // the spectrum is Hermitian and the field real.
      const std::size_t canonical = std::min(idx, mirror);
      double phase = 2.0 * std::numbers::pi * rng.uniform01(canonical);
      if (idx == mirror) phase = phase < std::numbers::pi ? 0.0 : std::numbers::pi;
      if (idx != canonical) phase = -phase;
      const double amplitude = 1.0 / f;
      spectrum[idx][0] = amplitude * std::cos(phase);
      spectrum[idx][1] = amplitude * std::sin(phase);
    }
  }

  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(height, width, spectrum.get(), field.get(), FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  Image out(width, height, 1);
  auto data = out.data();
  double lo = field[0][0], hi = field[0][0];
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = field[i][0];
    lo = std::min(lo, data[i]);
    hi = std::max(hi, data[i]);
  }
  const double span = hi - lo;
  for (double& v : data) v = (v - lo) / span;
  return out;
}

Image make_stimulus(const Image& source, const DegradationSpec& spec) {
  if (spec.kind == DegradationKind::Colour) return source;
  const Image gray = source.planes() == 3 ? to_grayscale(source) : source;
  switch (spec.kind) {
    case DegradationKind::Grayscale: return gray;
    case DegradationKind::Contrast: return scale_contrast(gray, spec.contrast);
    case DegradationKind::Noise:
      return add_uniform_noise(scale_contrast(gray, 30.0), spec.noise_width, spec.seed);
    case DegradationKind::Eidolon:
      return eidolon::partially_coherent_disarray(gray, spec.reach, spec.coherence, spec.grain,
                                                  spec.seed);
    case DegradationKind::Colour: break;
  }
  return gray;
}

std::string stimulus_filename(std::string_view image_id, const DegradationSpec& spec,
                              std::string_view extension) {
  std::string name(image_id);
  name += '_';
  name += spec.condition();
  if (spec.uses_seed()) name += "_s" + std::to_string(spec.seed);
  name += '.';
  name += extension;
  return name;
}

}  // namespace objrec
