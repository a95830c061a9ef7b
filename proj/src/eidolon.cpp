#include "objrec/eidolon.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "objrec/error.hpp"
#include "objrec/kernels.hpp"
#include "objrec/rng.hpp"

namespace objrec::eidolon {

namespace {

void add_into(Image& acc, const Image& term, double scale = 1.0) {
  auto a = acc.data();
  const auto t = term.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * t[i];
}

Image difference(const Image& a, const Image& b) {
  Image out = a;
  add_into(out, b, -1.0);
  return out;
}

void require_plane(const Image& img, const char* what) {
  if (img.planes() != 1) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + " expects a single-plane image");
  }
}

/// Unit-RMS field: blurred Gaussian noise normalized so sqrt(mean(dx^2+dy^2)) = 1.
DisplacementField unit_field(int width, int height, double grain, std::uint64_t seed) {
  Image nx(width, height, 1);
  Image ny(width, height, 1);
  kernels::gaussian_noise(nx.data(), CounterRng(derive_seed(seed, "dx")));
  kernels::gaussian_noise(ny.data(), CounterRng(derive_seed(seed, "dy")));
  DisplacementField f{kernels::gaussian_blur(nx, grain), kernels::gaussian_blur(ny, grain),
                      grain, 1.0};
  const double rms = f.rms();
  if (rms > 0.0) {
    for (double& v : f.dx.data()) v /= rms;
    for (double& v : f.dy.data()) v /= rms;
  }
  return f;
}

void check_field_params(int width, int height, double grain, double reach) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::InvalidParameter, "displacement field needs a non-empty extent");
  }
  if (!(grain > 0.0)) throw Error(ErrorKind::InvalidParameter, "grain must be > 0");
  if (!(reach >= 0.0)) throw Error(ErrorKind::InvalidParameter, "reach must be >= 0");
}

std::uint64_t shared_seed(std::uint64_t seed) { return derive_seed(seed, "shared"); }
std::uint64_t level_seed(std::uint64_t seed, int level) {
  return derive_seed(seed, static_cast<std::uint64_t>(level));
}

}  // namespace

Image ScaleSpaceStack::reconstruct() const {
  Image out = residual;
  for (const auto& level : levels) add_into(out, level);
  return out;
}

ScaleSpaceStack build_scale_space(const Image& img, int num_levels, double sigma_ratio,
                                  double sigma0) {
  require_plane(img, "build_scale_space");
  if (num_levels < 1) throw Error(ErrorKind::InvalidParameter, "num_levels must be >= 1");
  if (!(sigma_ratio > 1.0) || !(sigma0 > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "scale space needs sigma0 > 0 and ratio > 1");
  }
  ScaleSpaceStack stack;
  Image previous = img;
  for (int k = 0; k < num_levels; ++k) {
    const double sigma = sigma0 * std::pow(sigma_ratio, k);
    Image blurred = kernels::gaussian_blur(img, sigma);
    stack.levels.push_back(difference(previous, blurred));
    stack.sigmas.push_back(sigma);
    previous = std::move(blurred);
  }
  stack.residual = std::move(previous);
  return stack;
}

ScaleSpaceStack build_scale_space(const Image& img, const ScaleSpaceConfig& config) {
  return build_scale_space(img, config.num_levels, config.sigma_ratio, config.sigma0);
}

double DisplacementField::rms() const {
  if (dx.empty()) return 0.0;
  double acc = 0.0;
  const auto x = dx.data();
  const auto y = dy.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * x[i] + y[i] * y[i];
  return std::sqrt(acc / static_cast<double>(x.size()));
}

DisplacementField displacement_field(int width, int height, double grain, double reach,
                                     std::uint64_t seed) {
  check_field_params(width, height, grain, reach);
  if (reach == 0.0) {
    return {Image(width, height, 1), Image(width, height, 1), grain, 0.0};
  }
  DisplacementField f = unit_field(width, height, grain, seed);
  for (double& v : f.dx.data()) v *= reach;
  for (double& v : f.dy.data()) v *= reach;
  f.reach = reach;
  return f;
}

DisplacementField shared_field(int width, int height, double grain, double reach,
                               std::uint64_t seed) {
  return displacement_field(width, height, grain, reach, shared_seed(seed));
}

DisarrayPlan::DisarrayPlan(const Image& img, double coherence, double grain, std::uint64_t seed,
                           const ScaleSpaceConfig& config) {
  require_plane(img, "partially_coherent_disarray");
  if (!(coherence >= 0.0 && coherence <= 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "coherence must lie in [0,1]");
  }
  check_field_params(img.width(), img.height(), grain, 0.0);
  stack_ = build_scale_space(img, config);

  const int w = img.width();
  const int h = img.height();
  const double shared_weight = std::sqrt(coherence);
  const double own_weight = std::sqrt(1.0 - coherence);
  DisplacementField shared;
  if (shared_weight > 0.0) shared = unit_field(w, h, grain, shared_seed(seed));

  fields_.reserve(stack_.levels.size());
  for (int k = 0; k < static_cast<int>(stack_.levels.size()); ++k) {
    DisplacementField mixed{Image(w, h, 1), Image(w, h, 1), grain, 1.0};
    if (shared_weight > 0.0) {
      add_into(mixed.dx, shared.dx, shared_weight);
      add_into(mixed.dy, shared.dy, shared_weight);
    }
    if (own_weight > 0.0) {
      const DisplacementField own = unit_field(w, h, grain, level_seed(seed, k));
      add_into(mixed.dx, own.dx, own_weight);
      add_into(mixed.dy, own.dy, own_weight);
    }
    fields_.push_back(std::move(mixed));
  }
}

Image DisarrayPlan::render(double reach) const {
  if (!(reach >= 0.0)) throw Error(ErrorKind::InvalidParameter, "reach must be >= 0");
  Image out = stack_.residual;
  const int w = out.width();
  const int h = out.height();
  for (std::size_t k = 0; k < stack_.levels.size(); ++k) {
    if (reach == 0.0) {
      add_into(out, stack_.levels[k]);
      continue;
    }
    Image dx(w, h, 1), dy(w, h, 1);
    kernels::affine(fields_[k].dx.data(), dx.data(), reach, 0.0);
    kernels::affine(fields_[k].dy.data(), dy.data(), reach, 0.0);
    add_into(out, kernels::bilinear_warp(stack_.levels[k], dx, dy));
  }
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image partially_coherent_disarray(const Image& img, double reach, double coherence,
                                  double grain, std::uint64_t seed,
                                  const ScaleSpaceConfig& config) {
  if (!(reach >= 0.0)) throw Error(ErrorKind::InvalidParameter, "reach must be >= 0");
  return DisarrayPlan(img, coherence, grain, seed, config).render(reach);
}

}  // namespace objrec::eidolon
