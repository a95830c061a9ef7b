#include "objrec/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "objrec/error.hpp"
#include "objrec/rng.hpp"

namespace objrec::report {

namespace {

constexpr const char* kPalette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg(int width, int height) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
         << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
         << "\" fill=\"#ffffff\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1,
            std::string_view extra = {}) {
    out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
         << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
         << num(width) << '"';
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << "/>\n";
  }

  void rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view stroke = "none") {
    out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
         << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
         << "\"/>\n";
  }

  void circle(double x, double y, double r, std::string_view fill) {
    out_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r)
         << "\" fill=\"" << fill << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke) {
    out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out_ << (i ? " " : "") << num(pts[i].first) << ',' << num(pts[i].second);
    }
    out_ << "\"/>\n";
  }

  void text(double x, double y, std::string_view s, std::string_view anchor = "start",
            int size = 12, std::string_view extra = {}) {
    out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" "
         << "font-size=\"" << size << "\" text-anchor=\"" << anchor << '"';
    if (!extra.empty()) out_ << ' ' << extra;
    out_ << '>' << escape(s) << "</text>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

std::string gray(double darkness) {
  const int v = static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(darkness, 0.0, 1.0))));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", v, v, v);
  return buf;
}

std::string response_label(int row) {
  return row == 0 ? std::string("na") : std::string(category_name(kAllCategories[row - 1]));
}

/// Maps condition levels to [0,1] along the chosen axis.
std::vector<double> axis_positions(const std::vector<double>& levels, AxisScale scale) {
  const std::size_t n = levels.size();
  std::vector<double> pos(n, 0.5);
  if (n < 2) return pos;
  if (scale == AxisScale::Categorical) {
    for (std::size_t i = 0; i < n; ++i) pos[i] = static_cast<double>(i) / (n - 1);
    return pos;
  }
  std::vector<double> t(n);
  if (scale == AxisScale::Linear) {
    t = levels;
  } else {
    const double base = scale == AxisScale::Log2 ? 2.0 : 10.0;
    double min_pos = 0.0;
    double max_pos = 0.0;
    for (double l : levels) {
      if (l > 0.0) {
        min_pos = min_pos == 0.0 ? l : std::min(min_pos, l);
        max_pos = std::max(max_pos, l);
      }
    }
    if (min_pos == 0.0) throw Error(ErrorKind::Layout, "log axis without positive levels");
    const double lo = std::log(min_pos) / std::log(base);
    const double hi = std::log(max_pos) / std::log(base);
    const double step = hi > lo ? (hi - lo) / 6.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (levels[i] < 0.0) throw Error(ErrorKind::Layout, "negative level on a log axis");
      t[i] = levels[i] > 0.0 ? std::log(levels[i]) / std::log(base) : lo - step;
    }
  }
  const auto [mn, mx] = std::minmax_element(t.begin(), t.end());
  const double span = *mx - *mn;
  for (std::size_t i = 0; i < n; ++i) pos[i] = span > 0 ? (t[i] - *mn) / span : 0.5;
  return pos;
}

}  // namespace

std::string_view figure_kind_name(FigureKind kind) noexcept {
  switch (kind) {
    case FigureKind::AccuracyCurve: return "accuracy_curve";
    case FigureKind::EntropyCurve: return "entropy_curve";
    case FigureKind::ConfusionHeatmap: return "confusion_heatmap";
    case FigureKind::ConfusionDifferenceHeatmap: return "confusion_difference_heatmap";
    case FigureKind::ThresholdGrid: return "threshold_grid";
  }
  return "";
}

std::optional<FigureKind> parse_figure_kind(std::string_view name) noexcept {
  for (auto k : {FigureKind::AccuracyCurve, FigureKind::EntropyCurve, FigureKind::ConfusionHeatmap,
                 FigureKind::ConfusionDifferenceHeatmap, FigureKind::ThresholdGrid}) {
    if (figure_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

AxisScale default_scale(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::Colour: return AxisScale::Categorical;
    case ExperimentKind::Contrast: return AxisScale::Log10;
    case ExperimentKind::Noise: return AxisScale::Log10;
    case ExperimentKind::Eidolon: return AxisScale::Log2;
  }
  return AxisScale::Linear;
}

// -- Curves -----------------------------------------------------------------

std::string emit_curves(std::span<const stats::AccuracyCurve> curves, const CurveFigure& figure) {
  if (curves.empty()) throw Error(ErrorKind::Layout, "no curves to plot");
  const auto& grid = curves.front().points;
  if (grid.empty()) throw Error(ErrorKind::Layout, "curve '" + curves.front().system + "' is empty");
  for (const auto& c : curves) {
    bool same = c.points.size() == grid.size();
    for (std::size_t i = 0; same && i < grid.size(); ++i) same = c.points[i].label == grid[i].label;
    if (!same) {
      throw Error(ErrorKind::Layout, "curve '" + c.system + "' does not share the condition grid of '" +
                                         curves.front().system + "'");
    }
  }

  constexpr int W = 640, H = 420;
  constexpr double left = 70, right = 170, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  const double y_max = figure.entropy ? 4.25 : 1.0;

  std::vector<double> levels;
  for (const auto& p : grid) levels.push_back(p.level);
  const auto pos = axis_positions(levels, figure.scale);
  auto X = [&](std::size_t i) { return left + 10 + pos[i] * (pw - 20); };
  auto Y = [&](double v) { return top + ph * (1.0 - std::clamp(v, 0.0, y_max) / y_max); };

  Svg svg(W, H);
  svg.text(W / 2.0, 24, figure.title, "middle", 15);
  svg.rect(left, top, pw, ph, "none", "#000000");

  const double y_step = figure.entropy ? 1.0 : 0.25;
  for (double v = 0.0; v <= y_max + 1e-9; v += y_step) {
    svg.line(left - 4, Y(v), left, Y(v), "#000000");
    svg.text(left - 8, Y(v) + 4, figure.entropy ? num(v).substr(0, 1) : num(v), "end", 11);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    svg.line(X(i), top + ph, X(i), top + ph + 4, "#000000");
    svg.text(X(i), top + ph + 18, grid[i].label, "middle", 10);
  }
  svg.text(left + pw / 2, H - 14, figure.x_label, "middle", 12);
  svg.text(18, top + ph / 2, figure.entropy ? "entropy [bits]" : "classification accuracy",
           "middle", 12, "transform=\"rotate(-90 18 " + num(top + ph / 2) + ")\"");

  if (figure.entropy) {
    svg.line(left, Y(4.0), left + pw, Y(4.0), "#555555", 1, "stroke-dasharray=\"6 4\"");
    svg.text(left + pw - 4, Y(4.0) - 4, "maximum 4 bits", "end", 10);
  } else {
    const double chance = 1.0 / kNumCategories;
    svg.line(left, Y(chance), left + pw, Y(chance), "#999999", 1, "stroke-dasharray=\"2 3\"");
  }

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* colour = kPalette[c % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& p = curves[c].points[i];
      pts.emplace_back(X(i), Y(p.value));
      if (p.range_max > p.range_min) {
        svg.line(X(i), Y(p.range_min), X(i), Y(p.range_max), colour, 1.5);
        svg.line(X(i) - 3, Y(p.range_min), X(i) + 3, Y(p.range_min), colour, 1.5);
        svg.line(X(i) - 3, Y(p.range_max), X(i) + 3, Y(p.range_max), colour, 1.5);
      }
    }
    svg.polyline(pts, colour);
    for (const auto& [x, y] : pts) svg.circle(x, y, 3.5, colour);
    const double ly = top + 14 + 18.0 * static_cast<double>(c);
    svg.line(left + pw + 14, ly - 4, left + pw + 34, ly - 4, colour, 2);
    svg.text(left + pw + 40, ly, curves[c].system, "start", 11);
  }
  return svg.finish();
}

// -- Heatmaps ----------------------------------------------------------------

namespace {

constexpr double kCell = 30, kLeft = 90, kTop = 110;

void heatmap_axes(Svg& svg) {
  for (int col = 0; col < stats::ConfusionMatrix::kCols; ++col) {
    const double x = kLeft + kCell * col + kCell / 2;
    svg.text(x, kTop - 6, category_name(kAllCategories[col]), "start", 10,
             "transform=\"rotate(-60 " + num(x) + ' ' + num(kTop - 6) + ")\"");
  }
  for (int row = 0; row < stats::ConfusionMatrix::kRows; ++row) {
    svg.text(kLeft - 6, kTop + kCell * row + kCell / 2 + 4, response_label(row), "end", 10);
  }
  svg.text(kLeft + kCell * 8, kTop + kCell * 17 + 22, "presented category", "middle", 12);
}

}  // namespace

std::string emit_confusion_heatmap(const stats::ConfusionMatrix& matrix, std::string_view title) {
  const int W = static_cast<int>(kLeft + kCell * 16 + 30);
  const int H = static_cast<int>(kTop + kCell * 17 + 40);
  Svg svg(W, H);
  svg.text(W / 2.0, 20, title, "middle", 14);
  heatmap_axes(svg);
  for (int col = 0; col < stats::ConfusionMatrix::kCols; ++col) {
    const bool shown = matrix.presented(col);
    for (int row = 0; row < stats::ConfusionMatrix::kRows; ++row) {
      const double x = kLeft + kCell * col, y = kTop + kCell * row;
      svg.rect(x, y, kCell, kCell, shown ? gray(matrix.fraction(row, col)) : "#ffffff", "#dddddd");
    }
  }
  return svg.finish();
}

std::string emit_confusion_heatmap(const stats::ConfusionDifference& diff,
                                   std::string_view title) {
  // Index by significance level; positive deltas red, negative blue.
  static constexpr const char* kPositive[] = {"#f2f2f2", "#fcbba1", "#fb6a4a", "#cb181d"};
  static constexpr const char* kNegative[] = {"#f2f2f2", "#c6dbef", "#6baed6", "#2171b5"};

  const int W = static_cast<int>(kLeft + kCell * 16 + 200);
  const int H = static_cast<int>(kTop + kCell * 17 + 40);
  Svg svg(W, H);
  svg.text(W / 2.0, 20, title, "middle", 14);
  heatmap_axes(svg);
  for (int col = 0; col < stats::ConfusionDifference::kCols; ++col) {
    for (int row = 0; row < stats::ConfusionDifference::kRows; ++row) {
      const double x = kLeft + kCell * col, y = kTop + kCell * row;
      const auto level = static_cast<int>(diff.significance[row][col]);
      const double d = diff.delta[row][col];
      svg.rect(x, y, kCell, kCell, d < 0 ? kNegative[level] : kPositive[level], "#dddddd");
      const long pct = std::lround(d * 100.0);
      if (pct != 0) {
        svg.text(x + kCell / 2, y + kCell / 2 + 4, std::to_string(pct), "middle", 9,
                 level >= 2 ? "fill=\"#ffffff\"" : "");
      }
    }
  }
  const double lx = kLeft + kCell * 16 + 20;
  svg.text(lx, kTop + 4, "significance (" + std::to_string(diff.comparisons) + " comparisons)",
           "start", 10);
  for (int i = 0; i < 3; ++i) {
    const double y = kTop + 20 + 22.0 * i;
    svg.rect(lx, y - 10, 14, 14, kPositive[i + 1], "#999999");
    svg.rect(lx + 16, y - 10, 14, 14, kNegative[i + 1], "#999999");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s alpha = %.3g", significance_stars(static_cast<stats::Significance>(i + 1)),
                  diff.alphas[static_cast<std::size_t>(i)]);
    svg.text(lx + 36, y + 2, buf, "start", 10);
  }
  svg.text(lx, kTop + 96, "cell text: delta [%]", "start", 10);
  return svg.finish();
}

// -- Threshold grid -----------------------------------------------------------

DegradationSpec threshold_condition(ExperimentKind kind, double level, std::uint64_t seed,
                                    double coherence) {
  switch (kind) {
    case ExperimentKind::Contrast: return DegradationSpec::contrast_level(level);
    case ExperimentKind::Noise: return DegradationSpec::noise(level, seed);
    case ExperimentKind::Eidolon:
      return DegradationSpec::eidolon(level, coherence, kEidolonGrain, seed);
    case ExperimentKind::Colour: break;
  }
  throw Error(ErrorKind::InvalidParameter, "the colour experiment has no threshold level");
}

ThresholdGrid emit_threshold_grid(std::span<const ThresholdRow> rows,
                                  std::span<const Image> samples, ExperimentKind kind,
                                  std::uint64_t seed, double coherence) {
  if (samples.empty()) throw Error(ErrorKind::Layout, "threshold grid needs sample images");
  for (const auto& s : samples) {
    if (s.width() != kTileSize || s.height() != kTileSize) {
      throw Error(ErrorKind::Layout, "threshold grid samples must be 256x256");
    }
  }
  ThresholdGrid grid;
  std::vector<ThresholdRow> kept;
  for (const auto& r : rows) {
    if (r.level) {
      kept.push_back(r);
    } else {
      grid.warnings.push_back("no 50% threshold for '" + r.system + "'; row omitted");
    }
  }
  // Most severe degradation first: lowest contrast, widest noise, largest reach.
  std::stable_sort(kept.begin(), kept.end(), [kind](const ThresholdRow& a, const ThresholdRow& b) {
    return kind == ExperimentKind::Contrast ? *a.level < *b.level : *a.level > *b.level;
  });
  if (kept.empty()) throw Error(ErrorKind::Layout, "no system has a threshold");

  const int cols = static_cast<int>(samples.size());
  const int nrows = static_cast<int>(kept.size());
  Image out(cols * kTileSize, nrows * kTileSize, 1);
  for (int r = 0; r < nrows; ++r) {
    grid.rows.push_back(kept[static_cast<std::size_t>(r)].system);
    for (int c = 0; c < cols; ++c) {
      const auto spec = threshold_condition(kind, *kept[static_cast<std::size_t>(r)].level,
                                            derive_seed(seed, static_cast<std::uint64_t>(c)),
                                            coherence);
      const Image tile = make_stimulus(samples[static_cast<std::size_t>(c)], spec);
      for (int y = 0; y < kTileSize; ++y) {
        for (int x = 0; x < kTileSize; ++x) {
          out.at(c * kTileSize + x, r * kTileSize + y, 0) = tile.at(x, y, 0);
        }
      }
    }
  }
  grid.image = std::move(out);
  return grid;
}

}  // namespace objrec::report
