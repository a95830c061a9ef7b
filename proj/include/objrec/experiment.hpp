#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "objrec/degrade.hpp"

namespace objrec {

enum class ExperimentKind { Colour, Contrast, Noise, Eidolon };

std::string_view experiment_name(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> parse_experiment(std::string_view name) noexcept;

/// Condition grid of an experiment, ordered from strongest to weakest signal.
/// Seeds are left at 0; planning assigns per-image seeds.
std::vector<DegradationSpec> experiment_conditions(ExperimentKind kind);

/// Trials between breaks: 128 for contrast, 256 otherwise.
int break_interval(ExperimentKind kind) noexcept;
/// Sessions per observer: 3 for eidolon, 1 otherwise.
int session_count(ExperimentKind kind) noexcept;

/// Degradation kind used when parsing bare numeric condition tokens.
std::optional<DegradationKind> condition_hint(ExperimentKind kind) noexcept;

inline constexpr int kTrialsPerSession = 1280;
inline constexpr int kImagesPerCategory = 80;
inline constexpr double kContrastGrid[] = {100, 50, 30, 15, 10, 5, 3, 1};
inline constexpr double kNoiseGrid[] = {0.0, 0.03, 0.05, 0.1, 0.2, 0.35, 0.6, 0.9};
inline constexpr double kReachGrid[] = {1, 2, 4, 8, 16, 32, 64, 128};
inline constexpr double kCoherenceGrid[] = {1.0, 0.3, 0.0};
inline constexpr double kEidolonGrain = 10.0;

}  // namespace objrec
