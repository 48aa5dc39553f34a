#include <algorithm>
#include <set>

#include "ripdet/fusion.hpp"
#include "ripdet/parallel.hpp"

namespace ripdet {

namespace {

struct ImageOutput {
  std::vector<ScoredBox> det;
  std::vector<ScoredPolygon> seg;
};

// Inputs split by kind, each indexed [file][image] -> instances.
struct Inputs {
  std::vector<std::vector<std::vector<ScoredBox>>> det;
  std::vector<std::vector<std::vector<ScoredPolygon>>> seg;
};

Inputs split_inputs(const Dataset& dataset, const std::vector<PredictionSet>& inputs) {
  Inputs out;
  const std::size_t n = dataset.images().size();
  for (const PredictionSet& set : inputs) {
    if (set.task == Task::kDetection) {
      out.det.emplace_back(n);
    } else {
      out.seg.emplace_back(n);
    }
    for (const PredictionInstance& p : set.instances) {
      const auto idx = dataset.image_index(p.image_id);
      if (!idx) {
        throw Error(ErrorCode::kUnknownImageRef,
                    "prediction references unknown image_id " + std::to_string(p.image_id));
      }
      if (set.task == Task::kDetection) {
        out.det.back()[*idx].push_back({*p.box(), p.score});
      } else {
        out.seg.back()[*idx].push_back(scored_polygon(*p.polygon(), p.score));
      }
    }
  }
  return out;
}

std::vector<ScoredBox> boxes_of(const std::vector<ScoredPolygon>& segs) {
  std::vector<ScoredBox> out;
  for (const ScoredPolygon& s : segs) out.push_back({s.box, s.score});
  return out;
}

ProbMask model_prob_mask(const std::vector<ScoredPolygon>& segs, const ImageRecord& img) {
  std::vector<PolygonSet> polys;
  std::vector<double> scores;
  for (const ScoredPolygon& s : segs) {
    polys.push_back(s.polygon);
    scores.push_back(s.score);
  }
  return instances_to_prob_mask(polys, scores, img.width, img.height);
}

void require_segmentation(const Inputs& in, Preset preset) {
  if (in.seg.empty()) {
    throw Error(ErrorCode::kEmptyInput, std::string(preset_name(preset)) +
                                            " needs at least one segmentation input");
  }
}

ImageOutput run_sigmoid(const Inputs& in, std::size_t i, const ImageRecord& img,
                        const FusionParams& p) {
  ImageOutput out;
  std::vector<ScoredBox> all_dets;
  std::vector<std::vector<ScoredBox>> models;
  for (const auto& file : in.det) {
    all_dets.insert(all_dets.end(), file[i].begin(), file[i].end());
    models.push_back(file[i]);
  }
  for (const auto& file : in.seg) {
    std::vector<ScoredPolygon> refined;
    for (const ScoredPolygon& s : file[i]) {
      if (auto ring = refine_segmentation(s.polygon, img.width, img.height, p)) {
        refined.push_back(scored_polygon(PolygonSet{{std::move(*ring)}}, s.score));
      }
    }
    refined = fuse_seg_det_scores(std::move(refined), all_dets, p);
    models.push_back(boxes_of(refined));
    out.seg.insert(out.seg.end(), refined.begin(), refined.end());
  }
  out.seg = confidence_filter(std::move(out.seg), p.seg_conf);
  out.det = confidence_filter(weighted_box_fusion(models, p.wbf_iou), p.det_conf);
  return out;
}

ImageOutput run_kmg(const Inputs& in, std::size_t i, const ImageRecord& img,
                    const FusionParams& p) {
  ImageOutput out;
  for (std::size_t f = 0; f < in.det.size(); ++f) {
    auto merged = merge_boxes_iou_ioa(in.det[f][i], p.merge_iou, p.merge_ioa);
    out.det = f == 0 ? std::move(merged)
                     : cross_model_merge(out.det, merged, p.match_iou, p.keep_conf);
  }
  for (const auto& file : in.seg) {
    for (const ScoredPolygon& s : file[i]) {
      const Mask m = rasterize(s.polygon, img.width, img.height);
      for (const Mask& comp : connected_components(m)) {
        if (comp.count() < static_cast<std::size_t>(p.min_region_area)) continue;
        Ring ring = simplify_polygon(trace_outer_contour(comp), p.eps_ratio);
        out.seg.push_back(scored_polygon(PolygonSet{{std::move(ring)}}, s.score));
      }
    }
  }
  if (!in.det.empty()) out.seg = detection_guided_filter(std::move(out.seg), out.det, p.guide_iou);
  return out;
}

ImageOutput run_ntr(const Inputs& in, std::size_t i, const ImageRecord& img,
                    const FusionParams& p) {
  ImageOutput out;
  std::vector<std::vector<ScoredBox>> models;
  for (const auto& file : in.det) models.push_back(file[i]);
  for (const auto& file : in.seg) models.push_back(boxes_of(file[i]));
  out.det = weighted_box_fusion(models, p.ntr_wbf_iou);
  const StructuringElement se(p.open_kernel);
  for (const auto& file : in.seg) {
    for (const ScoredPolygon& s : file[i]) {
      const Mask opened = morphology(rasterize(s.polygon, img.width, img.height),
                                     MorphOp::kOpen, se, p.open_iterations);
      if (opened.empty()) continue;
      out.seg.push_back(scored_polygon(PolygonSet{{trace_largest_contour(opened)}}, s.score));
    }
  }
  return out;
}

ImageOutput run_uno(const Inputs& in, std::size_t i, const ImageRecord& img,
                    const FusionParams& p) {
  std::vector<ProbMask> masks;
  for (const auto& file : in.seg) masks.push_back(model_prob_mask(file[i], img));
  return {{}, average_mask_ensemble(masks, p)};
}

ImageOutput run_visionx(const Inputs& in, std::size_t i, const ImageRecord& img,
                        const FusionParams& p) {
  std::vector<ProbMask> views;
  for (const auto& file : in.seg) views.push_back(model_prob_mask(file[i], img));
  const ProbMask merged = soft_mask_merge(views, p.soft_gate);
  const StructuringElement se(p.close_kernel);
  const Mask cleaned = morphology(
      morphology(merged.binarize(p.ensemble_threshold), MorphOp::kOpen, se, 1),
      MorphOp::kClose, se, 1);
  ImageOutput out;
  for (const Mask& comp : connected_components(cleaned)) {
    const std::size_t area = comp.count();
    if (area < static_cast<std::size_t>(p.min_region_area)) continue;
    double sum = 0.0;
    for (int r = 0; r < img.height; ++r) {
      for (int c = 0; c < img.width; ++c) {
        if (comp.at(r, c)) sum += merged.at(r, c);
      }
    }
    const double score = std::clamp(sum / static_cast<double>(area), 0.0, 1.0);
    out.seg.push_back(scored_polygon(PolygonSet{{trace_outer_contour(comp)}}, score));
    out.det.push_back({mask_to_bbox(comp), score});
  }
  return out;
}

// Builds a prediction file and drops anything that would not re-validate.
PredictionSet assemble(Task task, const Dataset& dataset, const std::vector<ImageOutput>& outs) {
  PredictionSet set{task, {}};
  const std::int64_t category = dataset.category().id;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const std::int64_t image_id = dataset.images()[i].id;
    if (task == Task::kDetection) {
      for (const ScoredBox& b : outs[i].det) {
        set.instances.push_back({image_id, category, b.score, b.box, set.instances.size()});
      }
    } else {
      for (const ScoredPolygon& s : outs[i].seg) {
        set.instances.push_back({image_id, category, s.score, s.polygon, set.instances.size()});
      }
    }
  }
  const ValidationReport report = validate_predictions(set, dataset);
  std::set<std::size_t> bad;
  for (const Issue& issue : report.errors) {
    if (issue.instance) bad.insert(*issue.instance);
  }
  if (!bad.empty()) {
    PredictionSet kept{task, {}};
    for (std::size_t k = 0; k < set.instances.size(); ++k) {
      if (bad.count(k)) continue;
      kept.instances.push_back(set.instances[k]);
      kept.instances.back().input_index = kept.instances.size() - 1;
    }
    set = std::move(kept);
  }
  set.sort();
  return set;
}

FusionResult run_identity(const std::vector<PredictionSet>& inputs) {
  FusionResult out;
  for (const PredictionSet& set : inputs) {
    auto& slot = set.task == Task::kDetection ? out.detection : out.segmentation;
    if (!slot) slot = PredictionSet{set.task, {}};
    for (PredictionInstance p : set.instances) {
      p.input_index = slot->instances.size();
      slot->instances.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace

std::string_view preset_name(Preset preset) {
  switch (preset) {
    case Preset::kIdentity: return "identity";
    case Preset::kUno: return "uno";
    case Preset::kSigmoid: return "sigmoid";
    case Preset::kKmg: return "kmg";
    case Preset::kNtr: return "ntr";
    case Preset::kVisionX: return "visionx";
  }
  return "identity";
}

Preset parse_preset(std::string_view name) {
  for (Preset p : {Preset::kIdentity, Preset::kUno, Preset::kSigmoid, Preset::kKmg, Preset::kNtr,
                   Preset::kVisionX}) {
    if (preset_name(p) == name) return p;
  }
  throw Error(ErrorCode::kUnknownPreset, "unknown fusion preset '" + std::string(name) + "'");
}

FusionConfig fusion_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "fusion config must be an object");
  FusionConfig config;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) {
      throw Error(ErrorCode::kInvalidConfig, "preset must be a string");
    }
    config.preset = parse_preset(j["preset"].get<std::string>());
  }
  if (j.contains("params")) config.params = params_from_json(j["params"]);
  for (const auto& [key, value] : j.items()) {
    if (key != "preset" && key != "params") {
      throw Error(ErrorCode::kInvalidConfig, "unknown fusion config key '" + key + "'");
    }
  }
  return config;
}

Json fusion_config_to_json(const FusionConfig& config) {
  return {{"preset", std::string(preset_name(config.preset))},
          {"params", params_to_json(config.params)}};
}

FusionResult run_pipeline(const FusionConfig& config, const Dataset& dataset,
                          const std::vector<PredictionSet>& inputs, int jobs) {
  config.params.validate();
  if (inputs.empty()) throw Error(ErrorCode::kEmptyInput, "fusion needs at least one input");
  if (config.preset == Preset::kIdentity) return run_identity(inputs);

  const bool mask_only = config.preset == Preset::kUno || config.preset == Preset::kVisionX;
  // A file without instances has no kind of its own; mask ensembles count it
  // as a segmenter that predicted nothing.
  std::vector<PredictionSet> retagged = inputs;
  if (mask_only) {
    for (PredictionSet& set : retagged) {
      if (set.instances.empty()) set.task = Task::kSegmentation;
    }
  }
  const Inputs in = split_inputs(dataset, retagged);
  if (mask_only) require_segmentation(in, config.preset);
  const FusionParams& p = config.params;
  std::vector<ImageOutput> outs(dataset.images().size());
  parallel_for(outs.size(), jobs, [&](std::size_t i) {
    const ImageRecord& img = dataset.images()[i];
    switch (config.preset) {
      case Preset::kUno: outs[i] = run_uno(in, i, img, p); break;
      case Preset::kSigmoid: outs[i] = run_sigmoid(in, i, img, p); break;
      case Preset::kKmg: outs[i] = run_kmg(in, i, img, p); break;
      case Preset::kNtr: outs[i] = run_ntr(in, i, img, p); break;
      case Preset::kVisionX: outs[i] = run_visionx(in, i, img, p); break;
      case Preset::kIdentity: break;
    }
  });

  FusionResult result;
  const bool has_det = !in.det.empty();
  const bool has_seg = !in.seg.empty();
  switch (config.preset) {
    case Preset::kUno:
      result.segmentation = assemble(Task::kSegmentation, dataset, outs);
      break;
    case Preset::kKmg:
      if (has_det) result.detection = assemble(Task::kDetection, dataset, outs);
      if (has_seg) result.segmentation = assemble(Task::kSegmentation, dataset, outs);
      break;
    case Preset::kSigmoid:
    case Preset::kNtr:
    case Preset::kVisionX:
      result.detection = assemble(Task::kDetection, dataset, outs);
      if (has_seg) result.segmentation = assemble(Task::kSegmentation, dataset, outs);
      break;
    case Preset::kIdentity:
      break;
  }
  return result;
}

}  // namespace ripdet
