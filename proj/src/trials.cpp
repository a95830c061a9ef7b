#include "objrec/trials.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "objrec/degrade.hpp"
#include "objrec/error.hpp"
#include "objrec/util.hpp"

namespace objrec {

namespace {

std::string format_optional(const std::optional<double>& v) {
  if (!v) return {};
  return format_number(*v);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> optional_number(std::string_view s) {
  s = trim(s);
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "na") return std::nullopt;
  auto v = parse_double(s);
  if (v && std::isnan(*v)) return std::nullopt;
  return v;
}

std::optional<ExperimentKind> guess_experiment(std::string_view source) {
  const std::string name = lower(std::filesystem::path(source).filename().string());
  for (auto kind : {ExperimentKind::Colour, ExperimentKind::Contrast, ExperimentKind::Noise,
                    ExperimentKind::Eidolon}) {
    if (name.starts_with(experiment_name(kind))) return kind;
  }
  if (name.starts_with("color")) return ExperimentKind::Colour;
  return std::nullopt;
}

}  // namespace

bool is_human_observer(std::string_view observer) noexcept {
  return observer.starts_with("subject") || observer.starts_with("human") ||
         observer.starts_with("participant");
}

std::string trial_to_csv(const TrialRecord& r) {
  std::ostringstream out;
  out << csv_field(r.observer) << ',' << r.session << ',' << r.run << ',' << r.trial << ','
      << csv_field(r.image_id) << ',' << category_name(r.category) << ','
      << csv_field(r.condition) << ',' << response_name(r.response) << ','
      << format_optional(r.rt_ms) << ',' << (r.is_practice ? "true" : "false") << ','
      << format_optional(r.onset_ms) << ',' << format_optional(r.click_ms) << ','
      << format_optional(r.received_ms);
  return out.str();
}

std::string trials_to_csv(std::span<const TrialRecord> records) {
  std::string out(kTrialLogHeader);
  out += '\n';
  for (const auto& r : records) {
    out += trial_to_csv(r);
    out += '\n';
  }
  return out;
}

std::vector<TrialRecord> parse_trials_csv(std::string_view text,
                                          std::optional<ExperimentKind> experiment,
                                          std::string_view source) {
  if (!experiment) experiment = guess_experiment(source);
  const auto hint = experiment ? condition_hint(*experiment) : std::nullopt;

  std::istringstream in{std::string(text)};
  std::string line;
  std::map<std::string, std::size_t> col;
  bool published = false;
  int line_no = 0;
  std::vector<TrialRecord> out;

  auto field = [&](const std::vector<std::string>& f, const char* name) -> std::string_view {
    auto it = col.find(name);
    if (it == col.end() || it->second >= f.size()) return {};
    return f[it->second];
  };
  auto fail = [&](const std::string& why) {
    return Error(ErrorKind::Ingestion,
                 std::string(source) + ":" + std::to_string(line_no) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto tl = trim(line);
    if (tl.empty() || tl.front() == '#') continue;
    const auto f = split_csv_line(tl);
    if (col.empty()) {
      for (std::size_t i = 0; i < f.size(); ++i) col[lower(trim(f[i]))] = i;
      published = col.contains("subj") && col.contains("object_response");
      if (!published && !(col.contains("observer") && col.contains("response"))) {
        throw fail("unrecognized trial-log header");
      }
      continue;
    }

    TrialRecord r;
    const auto cat_token = trim(field(f, "category"));
    const auto cat = parse_category(cat_token);
    if (!cat) throw fail("unknown category token '" + std::string(cat_token) + "'");
    r.category = *cat;
    try {
      r.response = parse_response(field(f, published ? "object_response" : "response"));
    } catch (const Error& e) {
      throw fail(e.what());
    }
    const auto condition_token = field(f, "condition");
    try {
      r.condition = DegradationSpec::parse(condition_token, hint).condition();
    } catch (const Error&) {
      throw fail("unknown condition token '" + std::string(condition_token) + "'");
    }

    if (published) {
      r.observer = std::string(trim(field(f, "subj")));
      r.session = static_cast<int>(parse_int(field(f, "session")).value_or(1));
      r.trial = static_cast<int>(parse_int(field(f, "trial")).value_or(0));
      r.image_id = std::string(trim(field(f, "imagename")));
      r.rt_ms = optional_number(field(f, "rt"));
      if (!is_human_observer(r.observer)) r.run = r.session;
    } else {
      r.observer = std::string(field(f, "observer"));
      r.session = static_cast<int>(parse_int(field(f, "session")).value_or(1));
      r.run = static_cast<int>(parse_int(field(f, "run")).value_or(0));
      r.trial = static_cast<int>(parse_int(field(f, "trial")).value_or(0));
      r.image_id = std::string(field(f, "image_id"));
      r.rt_ms = optional_number(field(f, "rt_ms"));
      const auto practice = trim(field(f, "is_practice"));
      r.is_practice = practice == "true" || practice == "1";
      r.onset_ms = optional_number(field(f, "onset_ms"));
      r.click_ms = optional_number(field(f, "click_ms"));
      r.received_ms = optional_number(field(f, "received_ms"));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TrialRecord> ingest_trials(const std::filesystem::path& file,
                                       std::optional<ExperimentKind> experiment) {
  return parse_trials_csv(read_text_file(file), experiment, file.string());
}

std::vector<TrialRecord> ingest_directory(const std::filesystem::path& dir,
                                          std::optional<ExperimentKind> experiment) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::NotFound, "no such directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TrialRecord> out;
  for (const auto& f : files) {
    auto part = ingest_trials(f, experiment);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<TrialRecord> filter_observer(std::span<const TrialRecord> records,
                                         std::string_view observer) {
  std::vector<TrialRecord> out;
  for (const auto& r : records) {
    if (r.observer == observer) out.push_back(r);
  }
  return out;
}

std::vector<TrialRecord> filter_condition(std::span<const TrialRecord> records,
                                          std::string_view condition) {
  std::vector<TrialRecord> out;
  for (const auto& r : records) {
    if (r.condition == condition) out.push_back(r);
  }
  return out;
}

std::vector<TrialRecord> main_trials(std::span<const TrialRecord> records) {
  std::vector<TrialRecord> out;
  for (const auto& r : records) {
    if (!r.is_practice) out.push_back(r);
  }
  return out;
}

}  // namespace objrec
