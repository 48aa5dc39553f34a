#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ripdet/coco_io.hpp"

namespace ripdet {

enum class MatchingProtocol {
  kGreedy,   // official scoring
  kOptimal,  // maximum-cardinality matching, for sensitivity analysis only
};

std::string_view protocol_name(MatchingProtocol protocol);
MatchingProtocol parse_protocol(std::string_view name);

// 0.40, 0.45, ..., 0.95 computed as exact decimal ratios.
std::vector<double> default_thresholds();

struct MetricConfig {
  std::vector<double> betas{1.0, 2.0};
  double headline_threshold = 0.5;
  std::vector<double> thresholds = default_thresholds();
  Task task = Task::kDetection;
  MatchingProtocol protocol = MatchingProtocol::kGreedy;
  // Worker threads for per-image evaluation; <= 0 means all cores. Never
  // affects results.
  int jobs = 1;

  // Throws Error(kInvalidConfig) when thresholds are not strictly increasing
  // in (0, 1] or a beta is not positive.
  void validate() const;
};

struct MatchPair {
  std::size_t prediction = 0;
  std::int64_t gt_id = 0;
  double iou = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct Matching {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::int64_t> unmatched_ground_truths;

  friend bool operator==(const Matching&, const Matching&) = default;
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Row-major IoU table: rows are predictions, columns ground truths.
struct IouMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

double iou_for_task(const PredictionInstance& pred, const GroundTruthInstance& gt,
                    Task task, const ImageRecord& image);

// IoUs between the predictions and ground truths of one image. Each mask is
// rasterized once.
IouMatrix compute_ious(const std::vector<const PredictionInstance*>& preds,
                       const std::vector<const GroundTruthInstance*>& gts, Task task,
                       const ImageRecord& image);

// Predictions must already be in descending score order. Each prediction
// takes the unmatched GT with the largest IoU >= threshold, lowest GT id on
// ties.
Matching greedy_match(const IouMatrix& ious, const std::vector<std::int64_t>& gt_ids,
                      double threshold);
// Maximum-cardinality one-to-one matching on the IoU >= threshold graph.
Matching optimal_match(const IouMatrix& ious, const std::vector<std::int64_t>& gt_ids,
                       double threshold);

Matching match_image(const std::vector<PredictionInstance>& preds,
                     const std::vector<GroundTruthInstance>& gts, double threshold,
                     Task task, const ImageRecord& image,
                     MatchingProtocol protocol = MatchingProtocol::kGreedy);

ConfusionCounts counts_of(const Matching& m);

// Micro-aggregated counts over every dataset image.
ConfusionCounts confusion_at(const Dataset& dataset, const PredictionSet& preds,
                             double threshold,
                             MatchingProtocol protocol = MatchingProtocol::kGreedy);

// Zero denominators give 0, so tp == 0 always yields 0.
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double f_beta(const ConfusionCounts& c, double beta);

// Mean F-beta over config.thresholds.
double f_over_range(const Dataset& dataset, const PredictionSet& preds,
                    const MetricConfig& config, double beta);

double final_score(double f1_50, double f1_range, double f2_50, double f2_range);

struct ThresholdResult {
  double threshold = 0.0;
  ConfusionCounts counts;
  std::vector<double> f;  // one per configured beta
};

// Headline metrics on the 0-100 scale.
struct Headline {
  double f1_50 = 0.0;
  double f1_range = 0.0;
  double f2_50 = 0.0;
  double f2_range = 0.0;
};

struct ImageDiagnostics {
  std::int64_t image_id = 0;
  std::vector<ConfusionCounts> counts;  // aligned with MetricsReport::thresholds
};

struct MetricsReport {
  MetricConfig config;
  std::size_t num_images = 0;
  std::size_t num_ground_truths = 0;
  std::size_t num_predictions = 0;
  std::vector<ThresholdResult> thresholds;  // config.thresholds order
  ThresholdResult headline_point;           // at config.headline_threshold
  Headline headline;
  double final_score = 0.0;
  std::vector<ImageDiagnostics> per_image;  // dataset image order
};

MetricsReport evaluate(const Dataset& dataset, const PredictionSet& preds,
                       const MetricConfig& config);

Json report_to_json(const MetricsReport& report);
std::string report_to_markdown(const MetricsReport& report, const std::string& name);

struct LeaderboardEntry {
  std::string name;
  Headline headline;
  double final_score = 0.0;
};

struct LeaderboardRow {
  int rank = 0;
  LeaderboardEntry entry;
};

// Descending final score, then descending F2[40:95], then name.
std::vector<LeaderboardRow> leaderboard(std::vector<LeaderboardEntry> entries);
LeaderboardEntry leaderboard_entry(const std::string& name, const MetricsReport& report);

std::string leaderboard_csv(const std::vector<LeaderboardRow>& rows);
std::string leaderboard_markdown(const std::vector<LeaderboardRow>& rows);

// Two decimals, as printed in result tables.
std::string format_score(double value);

}  // namespace ripdet
