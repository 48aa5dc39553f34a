#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ripdet/coco_io.hpp"

namespace ripdet {

struct FusionParams {
  // Segmentation/detection score fusion.
  double w_seg = 0.85;
  double w_det = 0.15;
  double iou_gate = 0.20;
  double penalty = 0.95;
  double wbf_iou = 0.45;
  // Segmentation refinement.
  int close_kernel = 5;
  int min_region_area = 24;
  double eps_ratio = 0.001;
  // Probability-mask ensembles.
  double ensemble_threshold = 0.5;
  int ensemble_min_area = 100;
  // Final confidence filtering.
  double seg_conf = 0.16;
  double det_conf = 0.18;
  // Two-detector merging and detection-guided filtering. No published values.
  double merge_iou = 0.6;
  double merge_ioa = 0.8;
  double match_iou = 0.5;
  double keep_conf = 0.5;
  double guide_iou = 0.5;
  // Box fusion across a detector and a segmenter, and mask opening.
  double ntr_wbf_iou = 0.5;
  int open_kernel = 5;
  int open_iterations = 3;
  // Overlap gate for soft mask merging.
  double soft_gate = 0.5;

  // Throws Error(kInvalidConfig).
  void validate() const;
  // Parses `value` into the named field; unknown keys throw kInvalidConfig.
  void set(std::string_view key, std::string_view value);
  void set(std::string_view key, const Json& value);
};

Json params_to_json(const FusionParams& params);
FusionParams params_from_json(const Json& j, FusionParams base = {});

// Per-pixel foreground probabilities, row-major.
class ProbMask {
 public:
  ProbMask() = default;
  ProbMask(int width, int height, double fill = 0.0);
  // Throws kInvalidArgument on size mismatch or values outside [0, 1].
  ProbMask(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int row, int col) const { return values_[index(row, col)]; }
  void set(int row, int col, double v) { values_[index(row, col)] = v; }
  const std::vector<double>& values() const { return values_; }

  // Pixels with value >= threshold.
  Mask binarize(double threshold) const;

  friend bool operator==(const ProbMask&, const ProbMask&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

// Text float map: "PROBMASK <width> <height>" then one line per row.
std::string write_prob_mask(const ProbMask& m);
ProbMask read_prob_mask(const std::string& text);

// Pixelwise max of score-weighted instance rasters.
ProbMask instances_to_prob_mask(const std::vector<PolygonSet>& polys,
                                const std::vector<double>& scores, int width, int height);

struct ScoredBox {
  BBox box;
  double score = 0.0;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

struct ScoredPolygon {
  PolygonSet polygon;
  BBox box;  // polygon_to_bbox(polygon)
  double score = 0.0;
};

ScoredPolygon scored_polygon(PolygonSet polygon, double score);

std::vector<ScoredBox> confidence_filter(std::vector<ScoredBox> boxes, double threshold);
std::vector<ScoredPolygon> confidence_filter(std::vector<ScoredPolygon> segs, double threshold);

// Survivors in descending score order; equal scores keep input order.
std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double iou_threshold);

// Boxes are visited by descending score, then ascending (x, y, w, h), then
// model order. A box joins the first cluster whose fused box reaches
// iou_threshold. Fused coordinates weight members by score * model weight,
// the fused score is the model-weighted mean score.
std::vector<ScoredBox> weighted_box_fusion(const std::vector<std::vector<ScoredBox>>& models,
                                           double iou_threshold,
                                           const std::vector<double>& weights);
std::vector<ScoredBox> weighted_box_fusion(const std::vector<std::vector<ScoredBox>>& models,
                                           double iou_threshold);

// Each segmentation is compared with its best-IoU detection (first one on
// ties); many segmentations may share a detection.
std::vector<ScoredPolygon> fuse_seg_det_scores(std::vector<ScoredPolygon> segs,
                                               const std::vector<ScoredBox>& dets,
                                               const FusionParams& params);

// Rasterize, close once, drop small components, keep the largest outer
// contour and simplify it. nullopt when nothing survives.
std::optional<Ring> refine_segmentation(const PolygonSet& poly, int width, int height,
                                        const FusionParams& params);

// Mean of the masks, binarized and split into 8-connected instances. Each
// instance scores the mean probability over its pixels.
std::vector<ScoredPolygon> average_mask_ensemble(const std::vector<ProbMask>& masks,
                                                 const FusionParams& params);

std::vector<ScoredBox> merge_boxes_iou_ioa(std::vector<ScoredBox> boxes, double iou_thr,
                                           double ioa_thr);

// Pairs are accepted by descending IoU (then list positions). Output is in
// descending score order.
std::vector<ScoredBox> cross_model_merge(const std::vector<ScoredBox>& a,
                                         const std::vector<ScoredBox>& b, double iou_thr,
                                         double keep_conf);

std::vector<ScoredPolygon> detection_guided_filter(std::vector<ScoredPolygon> segs,
                                                   const std::vector<ScoredBox>& dets,
                                                   double iou_thr);

// Masks whose binarized (>= 0.5) versions overlap with IoU >= overlap_gate
// are clustered transitively and averaged per pixel; clusters are combined by
// per-pixel max, so isolated masks pass through unchanged.
ProbMask soft_mask_merge(const std::vector<ProbMask>& masks, double overlap_gate);

enum class Preset { kIdentity, kUno, kSigmoid, kKmg, kNtr, kVisionX };

std::string_view preset_name(Preset preset);
// Throws Error(kUnknownPreset).
Preset parse_preset(std::string_view name);

struct FusionConfig {
  Preset preset = Preset::kIdentity;
  FusionParams params;
};

// {"preset": name, "params": {...}}; missing params keep their defaults.
FusionConfig fusion_config_from_json(const Json& j);
Json fusion_config_to_json(const FusionConfig& config);

struct FusionResult {
  std::optional<PredictionSet> detection;
  std::optional<PredictionSet> segmentation;
};

// Runs a preset over prediction files that all refer to `dataset`. Each
// input's task says whether it came from a detector or a segmenter. Images
// are processed independently on up to `jobs` threads.
FusionResult run_pipeline(const FusionConfig& config, const Dataset& dataset,
                          const std::vector<PredictionSet>& inputs, int jobs = 1);

}  // namespace ripdet
