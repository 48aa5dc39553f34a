#include <algorithm>
#include <cmath>
#include <string>

#include "ripdet/metrics.hpp"
#include "ripdet/parallel.hpp"

namespace ripdet {

namespace {

struct ImageWork {
  std::vector<const PredictionInstance*> preds;
  std::vector<const GroundTruthInstance*> gts;
  std::vector<std::int64_t> gt_ids;
};

std::vector<ImageWork> group_by_image(const Dataset& dataset, const PredictionSet& preds) {
  std::vector<ImageWork> work(dataset.images().size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    for (std::size_t a : dataset.annotations_by_image()[i]) {
      const GroundTruthInstance& gt = dataset.annotations()[a];
      work[i].gts.push_back(&gt);
      work[i].gt_ids.push_back(gt.id);
    }
  }
  for (const PredictionInstance& p : preds.instances) {
    const auto idx = dataset.image_index(p.image_id);
    if (!idx) {
      throw Error(ErrorCode::kUnknownImageRef,
                  "prediction references unknown image_id " + std::to_string(p.image_id));
    }
    work[*idx].preds.push_back(&p);
  }
  for (ImageWork& w : work) {
    std::stable_sort(w.preds.begin(), w.preds.end(),
                     [](const PredictionInstance* a, const PredictionInstance* b) {
                       if (a->score != b->score) return a->score > b->score;
                       return a->input_index < b->input_index;
                     });
  }
  return work;
}

// counts[image][threshold]
std::vector<std::vector<ConfusionCounts>> per_image_counts(
    const Dataset& dataset, const PredictionSet& preds, const std::vector<double>& thresholds,
    MatchingProtocol protocol, int jobs) {
  const std::vector<ImageWork> work = group_by_image(dataset, preds);
  std::vector<std::vector<ConfusionCounts>> out(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    const ImageWork& w = work[i];
    const IouMatrix ious = compute_ious(w.preds, w.gts, preds.task, dataset.images()[i]);
    out[i].reserve(thresholds.size());
    for (double t : thresholds) {
      const Matching m = protocol == MatchingProtocol::kGreedy
                             ? greedy_match(ious, w.gt_ids, t)
                             : optimal_match(ious, w.gt_ids, t);
      out[i].push_back(counts_of(m));
    }
  });
  return out;
}

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

std::string_view protocol_name(MatchingProtocol protocol) {
  return protocol == MatchingProtocol::kGreedy ? "greedy" : "optimal";
}

MatchingProtocol parse_protocol(std::string_view name) {
  if (name == "greedy") return MatchingProtocol::kGreedy;
  if (name == "optimal" || name == "hungarian") return MatchingProtocol::kOptimal;
  throw Error(ErrorCode::kInvalidConfig, "unknown matching protocol '" + std::string(name) + "'");
}

std::vector<double> default_thresholds() {
  std::vector<double> out;
  for (int pct = 40; pct <= 95; pct += 5) out.push_back(pct / 100.0);
  return out;
}

void MetricConfig::validate() const {
  if (thresholds.empty()) throw Error(ErrorCode::kInvalidConfig, "no IoU thresholds given");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double t = thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, "IoU thresholds must lie in (0, 1]");
    }
    if (i > 0 && !(t > thresholds[i - 1])) {
      throw Error(ErrorCode::kInvalidConfig, "IoU thresholds must be strictly increasing");
    }
  }
  if (!(headline_threshold > 0.0 && headline_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "headline threshold must lie in (0, 1]");
  }
  if (betas.empty()) throw Error(ErrorCode::kInvalidConfig, "no beta values given");
  for (double b : betas) {
    if (!(b > 0.0) || !std::isfinite(b)) {
      throw Error(ErrorCode::kInvalidConfig, "beta values must be positive");
    }
  }
}

ConfusionCounts confusion_at(const Dataset& dataset, const PredictionSet& preds,
                             double threshold, MatchingProtocol protocol) {
  ConfusionCounts total;
  for (const auto& image : per_image_counts(dataset, preds, {threshold}, protocol, 1)) {
    total += image.front();
  }
  return total;
}

double precision(const ConfusionCounts& c) {
  return safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
}

double recall(const ConfusionCounts& c) {
  return safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
}

double f_beta(const ConfusionCounts& c, double beta) {
  const double p = precision(c);
  const double r = recall(c);
  const double b2 = beta * beta;
  return safe_ratio((1.0 + b2) * p * r, b2 * p + r);
}

double f_over_range(const Dataset& dataset, const PredictionSet& preds,
                    const MetricConfig& config, double beta) {
  config.validate();
  const auto counts =
      per_image_counts(dataset, preds, config.thresholds, config.protocol, config.jobs);
  double sum = 0.0;
  for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
    ConfusionCounts total;
    for (const auto& image : counts) total += image[t];
    sum += f_beta(total, beta);
  }
  return sum / static_cast<double>(config.thresholds.size());
}

double final_score(double f1_50, double f1_range, double f2_50, double f2_range) {
  return (f1_50 + f1_range + f2_50 + f2_range) / 4.0;
}

MetricsReport evaluate(const Dataset& dataset, const PredictionSet& preds,
                       const MetricConfig& config) {
  config.validate();
  if (config.task != preds.task) {
    throw Error(ErrorCode::kInvalidConfig, "metric config task differs from prediction task");
  }

  // Range thresholds first, then the headline threshold when it is not one of
  // them.
  std::vector<double> all = config.thresholds;
  auto head_it = std::find(all.begin(), all.end(), config.headline_threshold);
  const std::size_t head_idx = static_cast<std::size_t>(head_it - all.begin());
  if (head_it == all.end()) all.push_back(config.headline_threshold);

  const auto counts = per_image_counts(dataset, preds, all, config.protocol, config.jobs);

  MetricsReport report;
  report.config = config;
  report.num_images = dataset.images().size();
  report.num_ground_truths = dataset.annotations().size();
  report.num_predictions = preds.instances.size();

  auto result_at = [&](std::size_t t) {
    ThresholdResult r;
    r.threshold = all[t];
    for (const auto& image : counts) r.counts += image[t];
    for (double b : config.betas) r.f.push_back(f_beta(r.counts, b));
    return r;
  };
  for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
    report.thresholds.push_back(result_at(t));
  }
  report.headline_point = result_at(head_idx);

  double f1_sum = 0.0;
  double f2_sum = 0.0;
  for (const ThresholdResult& r : report.thresholds) {
    f1_sum += f_beta(r.counts, 1.0);
    f2_sum += f_beta(r.counts, 2.0);
  }
  const double n = static_cast<double>(report.thresholds.size());
  report.headline.f1_50 = 100.0 * f_beta(report.headline_point.counts, 1.0);
  report.headline.f2_50 = 100.0 * f_beta(report.headline_point.counts, 2.0);
  report.headline.f1_range = 100.0 * (f1_sum / n);
  report.headline.f2_range = 100.0 * (f2_sum / n);
  report.final_score = final_score(report.headline.f1_50, report.headline.f1_range,
                                   report.headline.f2_50, report.headline.f2_range);

  report.per_image.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    report.per_image[i].image_id = dataset.images()[i].id;
    report.per_image[i].counts.assign(counts[i].begin(),
                                      counts[i].begin() + static_cast<long>(n));
  }
  return report;
}

}  // namespace ripdet
