#include <algorithm>
#include <functional>
#include <numeric>

#include "ripdet/metrics.hpp"

namespace ripdet {

namespace {

struct RasterInfo {
  Mask mask;
  PixelRect extent;
  std::size_t count = 0;
};

RasterInfo raster_info(const PolygonSet& poly, const ImageRecord& image) {
  RasterInfo info{rasterize(poly, image.width, image.height), {}, 0};
  info.extent = info.mask.extent();
  info.count = info.mask.count();
  return info;
}

const PolygonSet& polygon_of(const PredictionInstance& p) {
  const PolygonSet* poly = p.polygon();
  if (poly == nullptr) {
    throw Error(ErrorCode::kWrongPayloadKind, "segmentation scoring needs polygon predictions");
  }
  return *poly;
}

const BBox& box_of(const PredictionInstance& p) {
  const BBox* box = p.box();
  if (box == nullptr) {
    throw Error(ErrorCode::kWrongPayloadKind, "detection scoring needs box predictions");
  }
  return *box;
}

Matching collect(const std::vector<long>& gt_for_pred, const IouMatrix& ious,
                 const std::vector<std::int64_t>& gt_ids) {
  Matching m;
  std::vector<bool> gt_used(ious.cols, false);
  for (std::size_t p = 0; p < ious.rows; ++p) {
    if (gt_for_pred[p] < 0) {
      m.unmatched_predictions.push_back(p);
    } else {
      const auto g = static_cast<std::size_t>(gt_for_pred[p]);
      gt_used[g] = true;
      m.pairs.push_back({p, gt_ids[g], ious.at(p, g)});
    }
  }
  for (std::size_t g = 0; g < ious.cols; ++g) {
    if (!gt_used[g]) m.unmatched_ground_truths.push_back(gt_ids[g]);
  }
  return m;
}

}  // namespace

double iou_for_task(const PredictionInstance& pred, const GroundTruthInstance& gt, Task task,
                    const ImageRecord& image) {
  if (task == Task::kDetection) return box_iou(box_of(pred), gt.bbox);
  return mask_iou(rasterize(polygon_of(pred), image.width, image.height),
                  rasterize(gt.segmentation, image.width, image.height));
}

IouMatrix compute_ious(const std::vector<const PredictionInstance*>& preds,
                       const std::vector<const GroundTruthInstance*>& gts, Task task,
                       const ImageRecord& image) {
  IouMatrix out{preds.size(), gts.size(), std::vector<double>(preds.size() * gts.size(), 0.0)};
  if (out.values.empty()) return out;
  if (task == Task::kDetection) {
    for (std::size_t p = 0; p < preds.size(); ++p) {
      const BBox& pb = box_of(*preds[p]);
      for (std::size_t g = 0; g < gts.size(); ++g) {
        out.values[p * out.cols + g] = box_iou(pb, gts[g]->bbox);
      }
    }
    return out;
  }
  std::vector<RasterInfo> gt_rasters;
  gt_rasters.reserve(gts.size());
  for (const auto* gt : gts) gt_rasters.push_back(raster_info(gt->segmentation, image));
  for (std::size_t p = 0; p < preds.size(); ++p) {
    const RasterInfo pr = raster_info(polygon_of(*preds[p]), image);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const RasterInfo& gr = gt_rasters[g];
      if (pr.count == 0 && gr.count == 0) continue;
      const std::size_t inter = mask_intersection(pr.mask, pr.extent, gr.mask, gr.extent);
      out.values[p * out.cols + g] =
          static_cast<double>(inter) / static_cast<double>(pr.count + gr.count - inter);
    }
  }
  return out;
}

Matching greedy_match(const IouMatrix& ious, const std::vector<std::int64_t>& gt_ids,
                      double threshold) {
  std::vector<long> gt_for_pred(ious.rows, -1);
  std::vector<bool> taken(ious.cols, false);
  for (std::size_t p = 0; p < ious.rows; ++p) {
    long best = -1;
    for (std::size_t g = 0; g < ious.cols; ++g) {
      if (taken[g]) continue;
      const double v = ious.at(p, g);
      if (v < threshold) continue;
      if (best < 0 || v > ious.at(p, static_cast<std::size_t>(best)) ||
          (v == ious.at(p, static_cast<std::size_t>(best)) &&
           gt_ids[g] < gt_ids[static_cast<std::size_t>(best)])) {
        best = static_cast<long>(g);
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      gt_for_pred[p] = best;
    }
  }
  return collect(gt_for_pred, ious, gt_ids);
}

Matching optimal_match(const IouMatrix& ious, const std::vector<std::int64_t>& gt_ids,
                       double threshold) {
  // Kuhn's augmenting paths; GTs are tried in ascending id order.
  std::vector<std::size_t> order(ious.cols);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return gt_ids[a] < gt_ids[b]; });
  std::vector<long> pred_for_gt(ious.cols, -1);
  std::vector<long> gt_for_pred(ious.rows, -1);
  std::vector<bool> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t p) {
    for (std::size_t g : order) {
      if (visited[g] || ious.at(p, g) < threshold) continue;
      visited[g] = true;
      if (pred_for_gt[g] < 0 || augment(static_cast<std::size_t>(pred_for_gt[g]))) {
        pred_for_gt[g] = static_cast<long>(p);
        gt_for_pred[p] = static_cast<long>(g);
        return true;
      }
    }
    return false;
  };
  for (std::size_t p = 0; p < ious.rows; ++p) {
    visited.assign(ious.cols, false);
    augment(p);
  }
  return collect(gt_for_pred, ious, gt_ids);
}

Matching match_image(const std::vector<PredictionInstance>& preds,
                     const std::vector<GroundTruthInstance>& gts, double threshold, Task task,
                     const ImageRecord& image, MatchingProtocol protocol) {
  std::vector<const PredictionInstance*> pp;
  for (const auto& p : preds) pp.push_back(&p);
  std::vector<const GroundTruthInstance*> gp;
  std::vector<std::int64_t> ids;
  for (const auto& g : gts) {
    gp.push_back(&g);
    ids.push_back(g.id);
  }
  const IouMatrix ious = compute_ious(pp, gp, task, image);
  return protocol == MatchingProtocol::kGreedy ? greedy_match(ious, ids, threshold)
                                               : optimal_match(ious, ids, threshold);
}

ConfusionCounts counts_of(const Matching& m) {
  return {static_cast<std::int64_t>(m.pairs.size()),
          static_cast<std::int64_t>(m.unmatched_predictions.size()),
          static_cast<std::int64_t>(m.unmatched_ground_truths.size())};
}

}  // namespace ripdet
