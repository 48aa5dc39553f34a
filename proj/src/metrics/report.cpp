#include <algorithm>
#include <cstdio>
#include <sstream>

#include "ripdet/metrics.hpp"

namespace ripdet {

namespace {

std::string beta_key(double beta) {
  std::ostringstream os;
  os << beta;
  return os.str();
}

Json threshold_json(const ThresholdResult& r, const std::vector<double>& betas) {
  Json f = Json::object();
  for (std::size_t i = 0; i < betas.size(); ++i) f[beta_key(betas[i])] = r.f[i];
  return {{"iou", r.threshold},
          {"tp", r.counts.tp},
          {"fp", r.counts.fp},
          {"fn", r.counts.fn},
          {"precision", precision(r.counts)},
          {"recall", recall(r.counts)},
          {"f", std::move(f)}};
}

}  // namespace

std::string format_score(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

Json report_to_json(const MetricsReport& report) {
  const MetricConfig& cfg = report.config;
  Json thresholds = Json::array();
  for (const auto& r : report.thresholds) thresholds.push_back(threshold_json(r, cfg.betas));
  Json per_image = Json::array();
  for (const auto& img : report.per_image) {
    Json counts = Json::array();
    for (const auto& c : img.counts) counts.push_back(Json::array({c.tp, c.fp, c.fn}));
    per_image.push_back({{"image_id", img.image_id}, {"counts", std::move(counts)}});
  }
  return {
      {"task", std::string(task_name(cfg.task))},
      {"config",
       {{"betas", cfg.betas},
        {"headline_threshold", cfg.headline_threshold},
        {"thresholds", cfg.thresholds},
        {"matching", std::string(protocol_name(cfg.protocol))}}},
      {"totals",
       {{"images", report.num_images},
        {"ground_truths", report.num_ground_truths},
        {"predictions", report.num_predictions}}},
      {"thresholds", std::move(thresholds)},
      {"headline_point", threshold_json(report.headline_point, cfg.betas)},
      {"headline",
       {{"F1[50]", report.headline.f1_50},
        {"F1[40:95]", report.headline.f1_range},
        {"F2[50]", report.headline.f2_50},
        {"F2[40:95]", report.headline.f2_range}}},
      {"final_score", report.final_score},
      {"per_image_columns", "[tp, fp, fn] per IoU threshold"},
      {"per_image", std::move(per_image)},
  };
}

std::string report_to_markdown(const MetricsReport& report, const std::string& name) {
  std::ostringstream os;
  const Headline& h = report.headline;
  os << "# " << (report.config.task == Task::kDetection ? "Detection" : "Segmentation")
     << " results\n\n";
  os << "| Team Name | F1 | F1[40:95] | F2 | F2[40:95] | Final Score |\n";
  os << "|---|---|---|---|---|---|\n";
  os << "| " << name << " | " << format_score(h.f1_50) << " | " << format_score(h.f1_range)
     << " | " << format_score(h.f2_50) << " | " << format_score(h.f2_range) << " | "
     << format_score(report.final_score) << " |\n\n";
  os << "Images: " << report.num_images << ", ground truths: " << report.num_ground_truths
     << ", predictions: " << report.num_predictions << ", matching: "
     << protocol_name(report.config.protocol) << "\n\n";
  os << "| IoU | TP | FP | FN | Precision | Recall |";
  for (double b : report.config.betas) os << " F" << beta_key(b) << " |";
  os << "\n|---|---|---|---|---|---|";
  for (std::size_t i = 0; i < report.config.betas.size(); ++i) os << "---|";
  os << "\n";
  for (const ThresholdResult& r : report.thresholds) {
    os << "| " << format_score(r.threshold) << " | " << r.counts.tp << " | " << r.counts.fp
       << " | " << r.counts.fn << " | " << format_score(100.0 * precision(r.counts)) << " | "
       << format_score(100.0 * recall(r.counts)) << " |";
    for (double f : r.f) os << " " << format_score(100.0 * f) << " |";
    os << "\n";
  }
  return os.str();
}

LeaderboardEntry leaderboard_entry(const std::string& name, const MetricsReport& report) {
  return {name, report.headline, report.final_score};
}

std::vector<LeaderboardRow> leaderboard(std::vector<LeaderboardEntry> entries) {
  if (entries.empty()) throw Error(ErrorCode::kEmptyInput, "leaderboard needs at least one report");
  std::sort(entries.begin(), entries.end(),
            [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
              if (a.final_score != b.final_score) return a.final_score > b.final_score;
              if (a.headline.f2_range != b.headline.f2_range) {
                return a.headline.f2_range > b.headline.f2_range;
              }
              return a.name < b.name;
            });
  std::vector<LeaderboardRow> rows;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    rows.push_back({static_cast<int>(i + 1), std::move(entries[i])});
  }
  return rows;
}

std::string leaderboard_csv(const std::vector<LeaderboardRow>& rows) {
  std::ostringstream os;
  os << "rank,team,F1,F1[40:95],F2,F2[40:95],final_score\n";
  for (const auto& row : rows) {
    const Headline& h = row.entry.headline;
    std::string name = row.entry.name;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      name = quoted + "\"";
    }
    os << row.rank << ',' << name << ',' << format_score(h.f1_50) << ','
       << format_score(h.f1_range) << ',' << format_score(h.f2_50) << ','
       << format_score(h.f2_range) << ',' << format_score(row.entry.final_score) << '\n';
  }
  return os.str();
}

std::string leaderboard_markdown(const std::vector<LeaderboardRow>& rows) {
  std::ostringstream os;
  os << "| Rank | Team Name | F1 | F1[40:95] | F2 | F2[40:95] | Final Score |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    const Headline& h = row.entry.headline;
    os << "| " << row.rank << " | " << row.entry.name << " | " << format_score(h.f1_50)
       << " | " << format_score(h.f1_range) << " | " << format_score(h.f2_50) << " | "
       << format_score(h.f2_range) << " | " << format_score(row.entry.final_score) << " |\n";
  }
  return os.str();
}

}  // namespace ripdet
