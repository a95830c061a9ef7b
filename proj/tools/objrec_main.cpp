#include <csignal>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "objrec/analysis.hpp"
#include "objrec/codec.hpp"
#include "objrec/dataset.hpp"
#include "objrec/degrade.hpp"
#include "objrec/eidolon.hpp"
#include "objrec/error.hpp"
#include "objrec/evaluate.hpp"
#include "objrec/report.hpp"
#include "objrec/service.hpp"
#include "objrec/util.hpp"

namespace fs = std::filesystem;
using namespace objrec;

namespace {

ExperimentKind experiment_arg(const std::string& name) {
  const auto kind = parse_experiment(name);
  if (!kind) throw Error(ErrorKind::InvalidParameter, "unknown experiment '" + name + "'");
  return *kind;
}

CategoryMap load_map(const std::string& path) {
  return path.empty() ? CategoryMap::builtin() : CategoryMap::load(path);
}

std::vector<RawImage> raw_from_list(const fs::path& list) {
  std::vector<RawImage> out;
  const std::string text = read_text_file(list);
  std::size_t start = 0;
  bool header = true;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const auto line = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() < 3) throw Error(ErrorKind::InvalidInput, "list rows need image_id,wnid,path");
    fs::path p = f[2];
    if (p.is_relative()) p = list.parent_path() / p;
    out.push_back({f[0], f[1], p});
  }
  return out;
}

/// ImageNet-style names: "<wnid>_<number>.<ext>".
std::vector<RawImage> raw_from_dir(const fs::path& dir) {
  std::vector<RawImage> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
    const std::string stem = e.path().stem().string();
    out.push_back({stem, stem.substr(0, stem.find('_')), e.path()});
  }
  std::sort(out.begin(), out.end(),
            [](const RawImage& a, const RawImage& b) { return a.path < b.path; });
  return out;
}

std::vector<TrialRecord> read_records(const std::vector<std::string>& inputs,
                                      std::optional<ExperimentKind> kind) {
  std::vector<TrialRecord> out;
  for (const auto& in : inputs) {
    auto part = fs::is_directory(in) ? ingest_directory(in, kind) : ingest_trials(in, kind);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image degradation and object recognition robustness toolkit"};
  app.require_subcommand(1);

  // degrade
  std::string in, out, condition;
  std::uint64_t seed = 0;
  auto* degrade = app.add_subcommand("degrade", "Apply one condition to an image");
  degrade->add_option("--in", in, "Source image")->required();
  degrade->add_option("--out", out, "Output image (.png or .jpg)")->required();
  degrade->add_option("--condition", condition,
                      "Condition, e.g. grayscale, c30, noise_w0.35, e_r8_c1.0_g10")
      ->required();
  degrade->add_option("--seed", seed, "Seed for noise and eidolon conditions");

  // eidolon
  double reach = 8, coherence = 1.0, grain = kEidolonGrain;
  auto* eid = app.add_subcommand("eidolon", "Partially coherent disarray of an image");
  eid->add_option("--in", in)->required();
  eid->add_option("--out", out)->required();
  eid->add_option("--reach", reach);
  eid->add_option("--coherence", coherence);
  eid->add_option("--grain", grain);
  eid->add_option("--seed", seed);

  // mask
  int size = 256;
  auto* mask = app.add_subcommand("mask", "Full-contrast pink noise mask");
  mask->add_option("--out", out)->required();
  mask->add_option("--size", size);
  mask->add_option("--seed", seed);

  // pool
  std::string list, in_dir, out_dir, map_path;
  double max_sd = 2.0;
  bool allow_missing = false;
  auto* pool = app.add_subcommand("pool", "Preprocess raw images into a stimulus pool");
  auto* pool_src = pool->add_option_group("source");
  pool_src->add_option("--list", list, "CSV with image_id,wnid,path");
  pool_src->add_option("--in-dir", in_dir, "Directory of <wnid>_<n>.JPEG files");
  pool_src->require_option(1);
  pool->add_option("--out", out_dir, "Output directory")->required();
  pool->add_option("--size", size);
  pool->add_option("--max-sd", max_sd, "Luminance outlier cut in standard deviations");
  pool->add_option("--map", map_path, "Category map CSV (default: built in)");
  pool->add_flag("--allow-missing-categories", allow_missing);

  // plan
  std::string manifest, experiment, schedule_out, render_dir;
  int session = 0, practice = 0, per_category = kImagesPerCategory;
  bool as_json = false;
  auto* plan = app.add_subcommand("plan", "Plan one session's trial schedule");
  plan->add_option("--manifest", manifest, "Pool manifest CSV")->required();
  plan->add_option("--experiment", experiment)->required();
  plan->add_option("--seed", seed);
  plan->add_option("--session", session);
  plan->add_option("--practice", practice, "Practice trials");
  plan->add_option("--images-per-category", per_category);
  plan->add_option("--out", schedule_out)->required();
  plan->add_flag("--json", as_json, "Write JSON instead of CSV");
  plan->add_option("--render", render_dir, "Also render the stimuli into this directory");

  // run
  std::string schedule_path, stimuli_dir, replay, observer = "classifier", log_path;
  std::string adapter_cmd;
  int run_index = 0;
  bool resume = false;
  auto* run = app.add_subcommand("run", "Present a schedule to a classifier adapter");
  run->add_option("--schedule", schedule_path)->required();
  run->add_option("--stimuli", stimuli_dir)->required();
  auto* run_src = run->add_option_group("adapter");
  run_src->add_option("--replay", replay, "JSONL file of precomputed replies");
  run_src->add_option("--adapter", adapter_cmd, "Adapter command line (split on spaces)");
  run_src->require_option(1);
  run->add_option("--observer", observer);
  run->add_option("--run", run_index);
  run->add_option("--log", log_path)->required();
  run->add_flag("--resume", resume, "Continue an interrupted run from its log");
  run->add_option("--map", map_path);

  // ingest
  std::vector<std::string> inputs;
  auto* ingest = app.add_subcommand("ingest", "Normalize trial CSVs into the native schema");
  ingest->add_option("--in", inputs, "Files or directories")->required();
  ingest->add_option("--experiment", experiment);
  ingest->add_option("--out", out)->required();

  // analyze
  std::string confusion_condition, reference = "human";
  std::optional<double> eid_coherence;
  std::vector<std::string> samples;
  auto* analyze_cmd = app.add_subcommand("analyze", "Curves, confusions, thresholds, t-tests");
  analyze_cmd->add_option("--in", inputs, "Trial CSV files or directories")->required();
  analyze_cmd->add_option("--experiment", experiment)->required();
  analyze_cmd->add_option("--out", out, "analysis.json")->required();
  analyze_cmd->add_option("--coherence", eid_coherence);
  analyze_cmd->add_option("--condition", confusion_condition, "Condition for confusion matrices");
  analyze_cmd->add_option("--reference", reference);
  analyze_cmd->add_option("--samples", samples, "256x256 images for the threshold grid");
  analyze_cmd->add_option("--seed", seed);

  // report
  std::string kind_name, system;
  auto* report_cmd = app.add_subcommand("report", "Render a figure from analysis.json");
  report_cmd->add_option("--kind", kind_name,
                         "accuracy_curve, entropy_curve, confusion_heatmap, "
                         "confusion_difference_heatmap, threshold_grid")
      ->required();
  report_cmd->add_option("--in", in)->required();
  report_cmd->add_option("--out", out)->required();
  report_cmd->add_option("--system", system);

  // serve
  int port = 8080;
  std::string host = "127.0.0.1", data_dir;
  auto* serve = app.add_subcommand("serve", "HTTP session service for human observers");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--data-dir", data_dir, "Defaults to $OBJREC_DATA_DIR");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*degrade) {
      auto spec = DegradationSpec::parse(condition);
      if (spec.uses_seed()) spec.seed = seed;
      save_image(out, make_stimulus(load_image(in), spec));
    } else if (*eid) {
      Image img = load_image(in);
      if (img.planes() == 3) img = to_grayscale(img);
      save_image(out, eidolon::partially_coherent_disarray(img, reach, coherence, grain, seed));
    } else if (*mask) {
      save_image(out, pink_noise_mask(size, size, seed));
    } else if (*pool) {
      const auto raw = list.empty() ? raw_from_dir(in_dir) : raw_from_list(list);
      PoolOptions opts;
      opts.size = size;
      opts.max_sd = max_sd;
      opts.output_dir = out_dir;
      opts.require_all_categories = !allow_missing;
      PoolReport rep;
      const auto p = preprocess_pool(raw, load_map(map_path), opts, &rep);
      write_manifest(fs::path(out_dir) / "manifest.csv", p);
      std::cout << "input " << rep.input << ", unmapped " << rep.unmapped << ", grayscale "
                << rep.grayscale << ", too small " << rep.too_small << ", luminance outliers "
                << rep.luminance_outliers << ", retained " << rep.retained << '\n';
    } else if (*plan) {
      const auto p = read_manifest(manifest);
      PlanOptions opts;
      opts.images_per_category = per_category;
      opts.practice_trials = practice;
      const auto sched = plan_session(p, experiment_arg(experiment), seed, session, opts);
      write_text_file(schedule_out, as_json ? schedule_to_json(sched) : schedule_to_csv(sched));
      if (!render_dir.empty()) render_stimuli(p, sched, render_dir);
      std::cout << sched.trials.size() << " trials (" << sched.practice_count() << " practice)\n";
    } else if (*run) {
      const auto sched = schedule_from_csv(read_text_file(schedule_path));
      const auto& map = load_map(map_path);
      std::unique_ptr<ClassifierAdapter> adapter;
      if (!replay.empty()) {
        adapter = std::make_unique<ReplayAdapter>(replay, map);
      } else {
        std::vector<std::string> argv_words;
        std::istringstream words(adapter_cmd);
        for (std::string w; words >> w;) argv_words.push_back(w);
        adapter = std::make_unique<ProcessAdapter>(argv_words, map);
      }
      RunOptions opts;
      opts.observer = observer;
      opts.run = run_index;
      opts.log = log_path;
      opts.resume = resume;
      const auto records = run_experiment(*adapter, sched, stimuli_dir, opts);
      std::cout << records.size() << " trials, accuracy "
                << format_number(stats::accuracy(records)) << '\n';
    } else if (*ingest) {
      const auto kind = experiment.empty() ? std::nullopt
                                           : std::optional<ExperimentKind>(experiment_arg(experiment));
      const auto records = read_records(inputs, kind);
      write_text_file(out, trials_to_csv(records));
      std::cout << records.size() << " records\n";
    } else if (*analyze_cmd) {
      const auto kind = experiment_arg(experiment);
      const auto records = read_records(inputs, kind);
      AnalyzeOptions opts;
      opts.coherence = eid_coherence;
      if (!confusion_condition.empty()) opts.confusion_condition = confusion_condition;
      opts.reference = reference;
      opts.samples = samples;
      opts.seed = seed;
      write_text_file(out, analysis_to_json(analyze(records, kind, opts)));
    } else if (*report_cmd) {
      const auto kind = report::parse_figure_kind(kind_name);
      if (!kind) throw Error(ErrorKind::InvalidParameter, "unknown figure kind '" + kind_name + "'");
      const auto analysis = analysis_from_json(read_text_file(in));
      std::vector<std::string> warnings;
      render_figure(analysis, *kind, out,
                    system.empty() ? std::nullopt : std::optional<std::string>(system), &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    } else if (*serve) {
      if (data_dir.empty()) {
        const char* env = std::getenv(service::kDataDirEnv);
        if (!env) throw Error(ErrorKind::InvalidParameter, "no --data-dir and OBJREC_DATA_DIR unset");
        data_dir = env;
      }
      service::SessionService svc(data_dir);
      service::HttpServer server(svc);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ':' << bound << std::endl;
      server.run();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
