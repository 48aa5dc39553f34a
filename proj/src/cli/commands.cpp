#include <CLI11.hpp>

#include <algorithm>
#include <ostream>

#include "ripdet/cli.hpp"
#include "ripdet/fusion.hpp"
#include "ripdet/metrics.hpp"
#include "ripdet/parallel.hpp"

namespace fs = std::filesystem;

namespace ripdet::cli {

namespace {

struct CommonOptions {
  std::string gt;
  std::string task = "det";
  bool lenient = false;
  int jobs = 0;
  std::string out;
};

struct ValidateOptions {
  std::string pred;
  std::size_t max_per_image = 0;
};

struct ScoreOptions {
  std::string pred;
  std::string matching = "greedy";
  std::string name;
};

struct FuseOptions {
  std::vector<std::string> inputs;
  std::string preset;
  std::string config;
  std::vector<std::string> overrides;
};

struct LeaderboardOptions {
  std::string submissions;
  std::string matching = "greedy";
};

struct FixtureOptions {
  FixtureSpec spec;
};

Task task_option(const std::string& name) {
  try {
    return parse_task(name);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
}

MatchingProtocol protocol_option(const std::string& name) { return parse_protocol(name); }

PredictionOptions prediction_options(const CommonOptions& c) {
  PredictionOptions o;
  o.lenient = c.lenient;
  return o;
}

std::string pretty(const Json& j) { return j.dump(2) + "\n"; }

void write_manifest(const fs::path& dir, RunManifest manifest) {
  manifest.timestamp = utc_timestamp();
  write_text_file(dir / "manifest.json", pretty(manifest_to_json(manifest)));
}

Json metric_config_json(const MetricConfig& cfg, const CommonOptions& c) {
  return {{"task", std::string(task_name(cfg.task))},
          {"matching", std::string(protocol_name(cfg.protocol))},
          {"betas", cfg.betas},
          {"headline_threshold", cfg.headline_threshold},
          {"thresholds", cfg.thresholds},
          {"lenient", c.lenient},
          {"jobs", cfg.jobs}};
}

std::string headline_line(const Headline& h, double final) {
  return "F1[50] " + format_score(h.f1_50) + "  F1[40:95] " + format_score(h.f1_range) +
         "  F2[50] " + format_score(h.f2_50) + "  F2[40:95] " + format_score(h.f2_range) +
         "  Final " + format_score(final);
}

int cmd_validate(const CommonOptions& c, const ValidateOptions& v, std::ostream& out) {
  const Task task = task_option(c.task);
  const Dataset dataset = load_ground_truth(c.gt);
  PredictionOptions opts = prediction_options(c);
  opts.max_per_image = v.max_per_image;
  const PredictionLoad load = inspect_predictions(read_json_file(v.pred), dataset, task, opts);
  const ValidationReport& report = load.report;
  Json doc = serialize_report(report);
  doc["mode"] = c.lenient ? "lenient" : "strict";
  doc["task"] = std::string(task_name(task));
  const bool pass = c.lenient ? !report.has_file_level_errors() : report.ok();
  if (c.out.empty()) {
    out << pretty(doc);
  } else {
    write_text_file(c.out, pretty(doc));
    out << (pass ? "valid" : "invalid") << ": " << report.instances_seen << " instances, "
        << report.errors.size() << " errors, " << report.warnings.size() << " warnings, "
        << report.instances_dropped << " dropped\n";
    for (const Issue& e : report.errors) {
      out << "  " << error_code_name(e.code) << ": " << e.message << "\n";
    }
  }
  return pass ? kExitOk : kExitValidation;
}

int cmd_score(const CommonOptions& c, const ScoreOptions& s, std::ostream& out) {
  MetricConfig cfg;
  cfg.task = task_option(c.task);
  cfg.protocol = protocol_option(s.matching);
  cfg.jobs = resolve_jobs(c.jobs);
  const Dataset dataset = load_ground_truth(c.gt);
  const PredictionSet preds = load_predictions(s.pred, dataset, cfg.task, prediction_options(c));
  const MetricsReport report = evaluate(dataset, preds, cfg);
  const std::string name = s.name.empty() ? fs::path(s.pred).stem().string() : s.name;

  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  write_text_file(dir / "report.json", pretty(report_to_json(report)));
  write_text_file(dir / "report.md", report_to_markdown(report, name));
  write_manifest(dir, {"score", metric_config_json(cfg, c), {c.gt, s.pred},
                       {dir / "report.json", dir / "report.md"}, ""});
  out << headline_line(report.headline, report.final_score) << "\n";
  return kExitOk;
}

// Detector files carry boxes, segmenter files polygons; empty files take the
// --task kind.
Task infer_kind(const Json& doc, Task fallback) {
  if (!doc.is_array() || doc.empty()) return fallback;
  for (const Json& j : doc) {
    if (j.is_object() && j.contains("segmentation")) return Task::kSegmentation;
  }
  return Task::kDetection;
}

FusionConfig resolve_fusion_config(const FuseOptions& f) {
  FusionConfig cfg;
  if (!f.config.empty()) {
    Json doc;
    try {
      doc = read_json_file(f.config);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kMalformedJson) throw Error(ErrorCode::kInvalidConfig, e.what());
      throw;
    }
    cfg = fusion_config_from_json(doc);
  }
  if (!f.preset.empty()) cfg.preset = parse_preset(f.preset);
  for (const std::string& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::kInvalidConfig, "--set expects key=value, got '" + kv + "'");
    }
    cfg.params.set(std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
  }
  cfg.params.validate();
  return cfg;
}

int cmd_fuse(const CommonOptions& c, const FuseOptions& f, std::ostream& out) {
  const Task fallback = task_option(c.task);
  const FusionConfig cfg = resolve_fusion_config(f);
  const Dataset dataset = load_ground_truth(c.gt);
  std::vector<PredictionSet> inputs;
  Json kinds = Json::array();
  for (const std::string& path : f.inputs) {
    const Json doc = read_json_file(path);
    const Task kind = infer_kind(doc, fallback);
    try {
      inputs.push_back(parse_predictions(doc, dataset, kind, prediction_options(c)));
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
    kinds.push_back(std::string(task_name(kind)));
  }
  const int jobs = resolve_jobs(c.jobs);
  const FusionResult result = run_pipeline(cfg, dataset, inputs, jobs);

  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  std::vector<fs::path> outputs;
  for (const auto* set : {&result.detection, &result.segmentation}) {
    if (!*set) continue;
    const fs::path path = dir / ((*set)->task == Task::kDetection ? "det.json" : "seg.json");
    write_text_file(path, pretty(serialize_predictions(**set)));
    outputs.push_back(path);
    out << task_name((*set)->task) << ": " << (*set)->instances.size() << " instances -> "
        << path.string() << "\n";
  }
  Json config = fusion_config_to_json(cfg);
  config["input_kinds"] = std::move(kinds);
  config["lenient"] = c.lenient;
  config["jobs"] = jobs;
  std::vector<fs::path> input_paths{c.gt};
  input_paths.insert(input_paths.end(), f.inputs.begin(), f.inputs.end());
  write_manifest(dir, {"fuse", std::move(config), input_paths, outputs, ""});
  return kExitOk;
}

int cmd_leaderboard(const CommonOptions& c, const LeaderboardOptions& l, std::ostream& out) {
  MetricConfig cfg;
  cfg.task = task_option(c.task);
  cfg.protocol = protocol_option(l.matching);
  cfg.jobs = resolve_jobs(c.jobs);
  const Dataset dataset = load_ground_truth(c.gt);
  if (!fs::is_directory(l.submissions)) {
    throw Error(ErrorCode::kIoError, "not a directory: " + l.submissions);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(l.submissions)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no .json submissions in " + l.submissions);
  }
  std::vector<LeaderboardEntry> entries;
  for (const fs::path& file : files) {
    PredictionSet preds;
    try {
      preds = load_predictions(file, dataset, cfg.task, prediction_options(c));
    } catch (const Error& e) {
      throw Error(e.code(), "submission " + file.filename().string() + ": " + e.what());
    }
    entries.push_back(leaderboard_entry(file.stem().string(), evaluate(dataset, preds, cfg)));
  }
  const auto rows = leaderboard(std::move(entries));
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  const std::string markdown = leaderboard_markdown(rows);
  write_text_file(dir / "leaderboard.csv", leaderboard_csv(rows));
  write_text_file(dir / "leaderboard.md", markdown);
  std::vector<fs::path> inputs{c.gt};
  inputs.insert(inputs.end(), files.begin(), files.end());
  write_manifest(dir, {"leaderboard", metric_config_json(cfg, c), inputs,
                       {dir / "leaderboard.csv", dir / "leaderboard.md"}, ""});
  out << markdown;
  return kExitOk;
}

int cmd_gen_fixture(const CommonOptions& c, const FixtureOptions& g, std::ostream& out) {
  const Fixture fixture = generate_fixture(g.spec);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  write_text_file(dir / "gt.json", pretty(serialize_ground_truth(fixture.dataset)));
  write_text_file(dir / "pred_det.json", pretty(serialize_predictions(fixture.detection)));
  write_text_file(dir / "pred_seg.json", pretty(serialize_predictions(fixture.segmentation)));
  out << fixture.dataset.images().size() << " images, " << fixture.dataset.annotations().size()
      << " ground truths, " << fixture.detection.instances.size() << " predictions -> "
      << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError: return kExitIo;
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kUnknownPreset:
    case ErrorCode::kInvalidArgument: return kExitConfig;
    default: return kExitValidation;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rip current detection/segmentation scoring and fusion", "ripdet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions common;
  ValidateOptions validate;
  ScoreOptions score;
  FuseOptions fuse;
  LeaderboardOptions board;
  FixtureOptions fixture;

  auto add_common = [&](CLI::App* sub, bool needs_gt) {
    if (needs_gt) {
      sub->add_option("--gt", common.gt, "Ground-truth COCO JSON")->required();
      sub->add_option("--task", common.task, "det or seg")->capture_default_str();
      sub->add_flag("--lenient", common.lenient, "Drop invalid instances instead of failing");
    }
  };

  auto* v = app.add_subcommand("validate", "Check a prediction file against the ground truth");
  add_common(v, true);
  v->add_option("--pred", validate.pred, "Prediction JSON")->required();
  v->add_option("--max-per-image", validate.max_per_image, "Per-image instance cap (0: none)");
  v->add_option("--out", common.out, "Write the validation report here instead of stdout");

  auto* s = app.add_subcommand("score", "Score a prediction file");
  add_common(s, true);
  s->add_option("--pred", score.pred, "Prediction JSON")->required();
  s->add_option("--out", common.out, "Output directory")->required();
  s->add_option("--jobs", common.jobs, "Worker threads (0: all cores)");
  s->add_option("--matching", score.matching, "greedy or optimal")->capture_default_str();
  s->add_option("--name", score.name, "Team name in the markdown table");

  auto* f = app.add_subcommand("fuse", "Run a post-processing or fusion preset");
  add_common(f, true);
  f->add_option("--input,-i", fuse.inputs, "Prediction files")->required()->expected(1, -1);
  f->add_option("--preset", fuse.preset, "uno, sigmoid, kmg, ntr, visionx or identity");
  f->add_option("--config", fuse.config, "JSON with a preset and parameter overrides");
  f->add_option("--set", fuse.overrides, "Parameter override key=value")->expected(1, -1);
  f->add_option("--out", common.out, "Output directory")->required();
  f->add_option("--jobs", common.jobs, "Worker threads (0: all cores)");

  auto* l = app.add_subcommand("leaderboard", "Rank a directory of submissions");
  add_common(l, true);
  l->add_option("--submissions", board.submissions, "Directory of <team>.json files")
      ->required();
  l->add_option("--out", common.out, "Output directory")->required();
  l->add_option("--jobs", common.jobs, "Worker threads (0: all cores)");
  l->add_option("--matching", board.matching, "greedy or optimal")->capture_default_str();

  auto* g = app.add_subcommand("gen-fixture", "Write a synthetic dataset and predictions");
  g->add_option("--seed", fixture.spec.seed, "Random seed")->required();
  g->add_option("--images", fixture.spec.images)->capture_default_str();
  g->add_option("--instances", fixture.spec.instances, "Ground truths per image, at most")
      ->capture_default_str();
  g->add_option("--width", fixture.spec.width)->capture_default_str();
  g->add_option("--height", fixture.spec.height)->capture_default_str();
  g->add_option("--perturbation", fixture.spec.perturbation, "0 copies the ground truth")
      ->capture_default_str();
  g->add_option("--out", common.out, "Output directory")->required();

  std::vector<std::string> storage{"ripdet"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (v->parsed()) return cmd_validate(common, validate, out);
    if (s->parsed()) return cmd_score(common, score, out);
    if (f->parsed()) return cmd_fuse(common, fuse, out);
    if (l->parsed()) return cmd_leaderboard(common, board, out);
    if (g->parsed()) return cmd_gen_fixture(common, fixture, out);
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error [IoError]: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace ripdet::cli
