#include "objrec/experiment.hpp"

namespace objrec {

std::string_view experiment_name(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::Colour: return "colour";
    case ExperimentKind::Contrast: return "contrast";
    case ExperimentKind::Noise: return "noise";
    case ExperimentKind::Eidolon: return "eidolon";
  }
  return "colour";
}

std::optional<ExperimentKind> parse_experiment(std::string_view name) noexcept {
  if (name == "colour" || name == "color") return ExperimentKind::Colour;
  if (name == "contrast" || name == "contrast-png") return ExperimentKind::Contrast;
  if (name == "noise") return ExperimentKind::Noise;
  if (name == "eidolon") return ExperimentKind::Eidolon;
  return std::nullopt;
}

std::vector<DegradationSpec> experiment_conditions(ExperimentKind kind) {
  std::vector<DegradationSpec> out;
  switch (kind) {
    case ExperimentKind::Colour:
      out = {DegradationSpec::colour(), DegradationSpec::grayscale()};
      break;
    case ExperimentKind::Contrast:
      for (double c : kContrastGrid) out.push_back(DegradationSpec::contrast_level(c));
      break;
    case ExperimentKind::Noise:
      for (double w : kNoiseGrid) out.push_back(DegradationSpec::noise(w));
      break;
    case ExperimentKind::Eidolon:
      for (double coherence : kCoherenceGrid) {
        for (double reach : kReachGrid) {
          out.push_back(DegradationSpec::eidolon(reach, coherence, kEidolonGrain));
        }
      }
      break;
  }
  return out;
}

int break_interval(ExperimentKind kind) noexcept {
  return kind == ExperimentKind::Contrast ? 128 : 256;
}

int session_count(ExperimentKind kind) noexcept {
  return kind == ExperimentKind::Eidolon ? 3 : 1;
}

std::optional<DegradationKind> condition_hint(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::Contrast: return DegradationKind::Contrast;
    case ExperimentKind::Noise: return DegradationKind::Noise;
    case ExperimentKind::Eidolon: return DegradationKind::Eidolon;
    case ExperimentKind::Colour: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace objrec
