#include "objrec/analysis.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "json.hpp"
#include "objrec/codec.hpp"
#include "objrec/error.hpp"
#include "objrec/evaluate.hpp"
#include "objrec/util.hpp"

namespace objrec {

using ojson = nlohmann::ordered_json;

std::string system_of(const TrialRecord& r) {
  return is_human_observer(r.observer) ? std::string("human") : r.observer;
}

namespace {

std::vector<TrialRecord> of_system(std::span<const TrialRecord> records, std::string_view system) {
  std::vector<TrialRecord> out;
  for (const auto& r : records) {
    if (!r.is_practice && system_of(r) == system) out.push_back(r);
  }
  return out;
}

}  // namespace

Analysis analyze(std::span<const TrialRecord> records, ExperimentKind kind,
                 const AnalyzeOptions& options) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "nothing to analyze");
  Analysis a;
  a.experiment = kind;
  a.samples = options.samples;
  a.seed = options.seed;
  if (kind == ExperimentKind::Eidolon) a.coherence = options.coherence.value_or(1.0);

  std::set<std::string> names;
  for (const auto& r : records) names.insert(system_of(r));
  if (names.contains("human")) a.systems.push_back("human");
  for (const auto& n : names) {
    if (n != "human") a.systems.push_back(n);
  }

  std::string confusion_condition;
  if (options.confusion_condition) {
    confusion_condition = DegradationSpec::parse(*options.confusion_condition,
                                                 condition_hint(kind)).condition();
  } else {
    for (const auto& spec : experiment_conditions(kind)) {
      const auto c = spec.condition();
      if (std::any_of(records.begin(), records.end(),
                      [&](const TrialRecord& r) { return r.condition == c; })) {
        confusion_condition = c;
        break;
      }
    }
  }

  std::map<std::string, stats::ConfusionMatrix> matrices;
  for (const auto& system : a.systems) {
    const auto rs = of_system(records, system);
    a.accuracy.push_back(build_curve(rs, kind, system, CurveMetric::Accuracy, a.coherence));
    a.entropy.push_back(build_curve(rs, kind, system, CurveMetric::Entropy, a.coherence));
    const auto at_condition = filter_condition(rs, confusion_condition);
    if (!at_condition.empty()) {
      auto m = stats::confusion_matrix(at_condition);
      matrices.emplace(system, m);
      a.confusions.push_back({system, confusion_condition, m});
    }
    if (kind == ExperimentKind::Colour) {
      a.thresholds.push_back({system, std::nullopt});
    } else {
      std::optional<double> level;
      try {
        level = stats::threshold_50(a.accuracy.back());
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoThreshold) throw;
      }
      a.thresholds.push_back({system, level});
    }
    if (kind == ExperimentKind::Colour) {
      // Pair within each observer, then concatenate.
      std::vector<double> va, vb;
      std::set<std::string> observers;
      for (const auto& r : rs) observers.insert(r.observer);
      try {
        for (const auto& o : observers) {
          const auto mine = filter_observer(rs, o);
          auto [x, y] = stats::paired_correctness(mine, "colour", "grayscale");
          va.insert(va.end(), x.begin(), x.end());
          vb.insert(vb.end(), y.begin(), y.end());
        }
        if (va.size() >= 2) {
          a.t_tests.push_back({system, "colour", "grayscale", stats::paired_t_test(va, vb)});
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InvalidInput && e.kind() != ErrorKind::ZeroVariance) throw;
      }
    }
  }

  std::string reference = options.reference;
  if (!matrices.contains(reference) && !a.systems.empty()) reference = a.systems.front();
  if (matrices.contains(reference)) {
    for (const auto& system : a.systems) {
      if (system == reference || !matrices.contains(system)) continue;
      a.differences.push_back({reference, system, confusion_condition,
                               stats::confusion_difference(matrices.at(reference),
                                                           matrices.at(system))});
    }
  }
  return a;
}

// -- JSON ------------------------------------------------------------------------

namespace {

ojson curve_json(const stats::AccuracyCurve& c) {
  ojson pts = ojson::array();
  for (const auto& p : c.points) {
    pts.push_back({{"level", p.level},
                   {"label", p.label},
                   {"value", p.value},
                   {"range_min", p.range_min},
                   {"range_max", p.range_max}});
  }
  return {{"system", c.system}, {"points", pts}};
}

stats::AccuracyCurve curve_from(const ojson& j) {
  stats::AccuracyCurve c;
  c.system = j.at("system").get<std::string>();
  for (const auto& p : j.at("points")) {
    c.points.push_back({p.at("level").get<double>(), p.at("label").get<std::string>(),
                        p.at("value").get<double>(), p.at("range_min").get<double>(),
                        p.at("range_max").get<double>()});
  }
  return c;
}

template <typename T, std::size_t R, std::size_t C>
ojson grid_json(const std::array<std::array<T, C>, R>& g) {
  ojson rows = ojson::array();
  for (const auto& row : g) {
    ojson r = ojson::array();
    for (const auto& v : row) {
      if constexpr (std::is_enum_v<T>) {
        r.push_back(static_cast<int>(v));
      } else {
        r.push_back(v);
      }
    }
    rows.push_back(r);
  }
  return rows;
}

template <typename T, std::size_t R, std::size_t C>
void grid_from(const ojson& j, std::array<std::array<T, C>, R>& g) {
  if (j.size() != R) throw Error(ErrorKind::InvalidInput, "matrix has the wrong number of rows");
  for (std::size_t r = 0; r < R; ++r) {
    if (j[r].size() != C) throw Error(ErrorKind::InvalidInput, "matrix row has the wrong length");
    for (std::size_t c = 0; c < C; ++c) {
      if constexpr (std::is_enum_v<T>) {
        g[r][c] = static_cast<T>(j[r][c].get<int>());
      } else {
        g[r][c] = j[r][c].get<T>();
      }
    }
  }
}

ojson matrix_json(const stats::ConfusionMatrix& m) {
  std::array<std::array<int, stats::ConfusionMatrix::kCols>, stats::ConfusionMatrix::kRows> g{};
  for (int r = 0; r < stats::ConfusionMatrix::kRows; ++r) {
    for (int c = 0; c < stats::ConfusionMatrix::kCols; ++c) g[r][c] = m.count(r, c);
  }
  return grid_json(g);
}

stats::ConfusionMatrix matrix_from(const ojson& j) {
  std::array<std::array<int, stats::ConfusionMatrix::kCols>, stats::ConfusionMatrix::kRows> g{};
  grid_from(j, g);
  stats::ConfusionMatrix m;
  for (int r = 0; r < stats::ConfusionMatrix::kRows; ++r) {
    const Response resp = r == 0 ? Response{} : Response{kAllCategories[r - 1]};
    for (int c = 0; c < stats::ConfusionMatrix::kCols; ++c) {
      if (g[r][c] < 0) throw Error(ErrorKind::InvalidInput, "negative confusion count");
      if (g[r][c]) m.add(kAllCategories[c], resp, g[r][c]);
    }
  }
  return m;
}

}  // namespace

std::string analysis_to_json(const Analysis& a) {
  ojson j;
  j["experiment"] = std::string(experiment_name(a.experiment));
  j["coherence"] = a.coherence ? ojson(*a.coherence) : ojson(nullptr);
  j["systems"] = a.systems;
  j["accuracy"] = ojson::array();
  for (const auto& c : a.accuracy) j["accuracy"].push_back(curve_json(c));
  j["entropy"] = ojson::array();
  for (const auto& c : a.entropy) j["entropy"].push_back(curve_json(c));
  j["confusions"] = ojson::array();
  for (const auto& c : a.confusions) {
    j["confusions"].push_back(
        {{"system", c.system}, {"condition", c.condition}, {"counts", matrix_json(c.matrix)}});
  }
  j["differences"] = ojson::array();
  for (const auto& d : a.differences) {
    ojson used = ojson::array();
    for (bool u : d.diff.column_used) used.push_back(u);
    j["differences"].push_back({{"a", d.a},
                                {"b", d.b},
                                {"condition", d.condition},
                                {"comparisons", d.diff.comparisons},
                                {"alphas", d.diff.alphas},
                                {"column_used", used},
                                {"delta", grid_json(d.diff.delta)},
                                {"p_value", grid_json(d.diff.p_value)},
                                {"significance", grid_json(d.diff.significance)}});
  }
  j["thresholds"] = ojson::array();
  for (const auto& t : a.thresholds) {
    j["thresholds"].push_back(
        {{"system", t.system}, {"level", t.level ? ojson(*t.level) : ojson(nullptr)}});
  }
  j["t_tests"] = ojson::array();
  for (const auto& t : a.t_tests) {
    j["t_tests"].push_back({{"system", t.system},
                            {"condition_a", t.condition_a},
                            {"condition_b", t.condition_b},
                            {"mean_difference", t.test.mean_difference},
                            {"t", t.test.t},
                            {"df", t.test.df},
                            {"p_value", t.test.p_value},
                            {"ci_lower", t.test.ci_lower},
                            {"ci_upper", t.test.ci_upper}});
  }
  j["samples"] = a.samples;
  j["seed"] = a.seed;
  return j.dump(2) + "\n";
}

Analysis analysis_from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw Error(ErrorKind::InvalidInput, std::string("analysis JSON: ") + e.what());
  }
  try {
    Analysis a;
    const auto kind = parse_experiment(j.at("experiment").get<std::string>());
    if (!kind) throw Error(ErrorKind::InvalidInput, "analysis JSON: unknown experiment");
    a.experiment = *kind;
    if (j.contains("coherence") && !j["coherence"].is_null()) {
      a.coherence = j["coherence"].get<double>();
    }
    a.systems = j.value("systems", std::vector<std::string>{});
    for (const auto& c : j.value("accuracy", ojson::array())) a.accuracy.push_back(curve_from(c));
    for (const auto& c : j.value("entropy", ojson::array())) a.entropy.push_back(curve_from(c));
    for (const auto& c : j.value("confusions", ojson::array())) {
      a.confusions.push_back({c.at("system").get<std::string>(),
                              c.at("condition").get<std::string>(), matrix_from(c.at("counts"))});
    }
    for (const auto& d : j.value("differences", ojson::array())) {
      SystemDifference sd;
      sd.a = d.at("a").get<std::string>();
      sd.b = d.at("b").get<std::string>();
      sd.condition = d.at("condition").get<std::string>();
      sd.diff.comparisons = d.at("comparisons").get<int>();
      sd.diff.alphas = d.at("alphas").get<std::array<double, 3>>();
      const auto used = d.at("column_used").get<std::vector<bool>>();
      for (std::size_t i = 0; i < used.size() && i < sd.diff.column_used.size(); ++i) {
        sd.diff.column_used[i] = used[i];
      }
      grid_from(d.at("delta"), sd.diff.delta);
      grid_from(d.at("p_value"), sd.diff.p_value);
      grid_from(d.at("significance"), sd.diff.significance);
      a.differences.push_back(std::move(sd));
    }
    for (const auto& t : j.value("thresholds", ojson::array())) {
      std::optional<double> level;
      if (!t.at("level").is_null()) level = t.at("level").get<double>();
      a.thresholds.push_back({t.at("system").get<std::string>(), level});
    }
    for (const auto& t : j.value("t_tests", ojson::array())) {
      SystemTTest st;
      st.system = t.at("system").get<std::string>();
      st.condition_a = t.at("condition_a").get<std::string>();
      st.condition_b = t.at("condition_b").get<std::string>();
      st.test.mean_difference = t.at("mean_difference").get<double>();
      st.test.t = t.at("t").get<double>();
      st.test.df = t.at("df").get<int>();
      st.test.p_value = t.at("p_value").get<double>();
      st.test.ci_lower = t.at("ci_lower").get<double>();
      st.test.ci_upper = t.at("ci_upper").get<double>();
      a.t_tests.push_back(std::move(st));
    }
    a.samples = j.value("samples", std::vector<std::string>{});
    a.seed = j.value("seed", std::uint64_t{0});
    return a;
  } catch (const ojson::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("analysis JSON: ") + e.what());
  }
}

// -- Figures -----------------------------------------------------------------------

namespace {

std::string x_label(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Colour: return "colour condition";
    case ExperimentKind::Contrast: return "contrast level [%]";
    case ExperimentKind::Noise: return "uniform noise width";
    case ExperimentKind::Eidolon: return "log2 of reach";
  }
  return "";
}

template <typename T>
const T& pick(const std::vector<T>& items, const std::optional<std::string>& system,
              std::string_view what, auto key) {
  if (items.empty()) throw Error(ErrorKind::NotFound, "analysis has no " + std::string(what));
  if (!system) return items.front();
  for (const auto& i : items) {
    if (key(i) == *system) return i;
  }
  throw Error(ErrorKind::NotFound, "no " + std::string(what) + " for system '" + *system + "'");
}

}  // namespace

void render_figure(const Analysis& a, report::FigureKind kind, const std::filesystem::path& out,
                   const std::optional<std::string>& system, std::vector<std::string>* warnings) {
  using report::FigureKind;
  const std::string experiment(experiment_name(a.experiment));
  switch (kind) {
    case FigureKind::AccuracyCurve:
    case FigureKind::EntropyCurve: {
      const bool entropy = kind == FigureKind::EntropyCurve;
      report::CurveFigure fig;
      fig.title = experiment + (entropy ? " experiment: response entropy"
                                        : " experiment: classification accuracy");
      fig.x_label = x_label(a.experiment);
      fig.scale = report::default_scale(a.experiment);
      fig.entropy = entropy;
      write_text_file(out, report::emit_curves(entropy ? a.entropy : a.accuracy, fig));
      return;
    }
    case FigureKind::ConfusionHeatmap: {
      const auto& c = pick(a.confusions, system, "confusion matrix",
                           [](const SystemConfusion& x) { return x.system; });
      write_text_file(out, report::emit_confusion_heatmap(c.matrix, c.system + ", " + c.condition));
      return;
    }
    case FigureKind::ConfusionDifferenceHeatmap: {
      const auto& d = pick(a.differences, system, "confusion difference",
                           [](const SystemDifference& x) { return x.b; });
      write_text_file(out, report::emit_confusion_heatmap(d.diff, d.a + " minus " + d.b + ", " +
                                                                      d.condition));
      return;
    }
    case FigureKind::ThresholdGrid: {
      std::vector<Image> samples;
      for (const auto& s : a.samples) samples.push_back(load_image(s));
      const auto grid = report::emit_threshold_grid(a.thresholds, samples, a.experiment, a.seed,
                                                    a.coherence.value_or(1.0));
      if (warnings) warnings->insert(warnings->end(), grid.warnings.begin(), grid.warnings.end());
      save_image(out, grid.image);
      return;
    }
  }
}

}  // namespace objrec
