#include <algorithm>
#include <numeric>

#include "ripdet/fusion.hpp"

namespace ripdet {

namespace {

void require_same_size(const std::vector<ProbMask>& masks) {
  if (masks.empty()) throw Error(ErrorCode::kEmptyInput, "no probability masks given");
  for (const ProbMask& m : masks) {
    if (m.width() != masks.front().width() || m.height() != masks.front().height()) {
      throw Error(ErrorCode::kDimensionMismatch, "probability masks differ in size");
    }
  }
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

ScoredPolygon scored_polygon(PolygonSet polygon, double score) {
  const BBox box = polygon_to_bbox(polygon);
  return {std::move(polygon), box, score};
}

std::vector<ScoredPolygon> confidence_filter(std::vector<ScoredPolygon> segs, double threshold) {
  std::erase_if(segs, [&](const ScoredPolygon& s) { return !(s.score >= threshold); });
  return segs;
}

std::vector<ScoredPolygon> fuse_seg_det_scores(std::vector<ScoredPolygon> segs,
                                               const std::vector<ScoredBox>& dets,
                                               const FusionParams& params) {
  for (ScoredPolygon& s : segs) {
    const ScoredBox* best = nullptr;
    double best_iou = -1.0;
    for (const ScoredBox& d : dets) {
      const double v = box_iou(s.box, d.box);
      if (v > best_iou) {
        best_iou = v;
        best = &d;
      }
    }
    if (best != nullptr && best_iou > params.iou_gate) {
      s.score = params.w_seg * s.score + params.w_det * best->score;
    } else {
      s.score = params.penalty * s.score;
    }
    s.score = std::clamp(s.score, 0.0, 1.0);
  }
  return segs;
}

std::optional<Ring> refine_segmentation(const PolygonSet& poly, int width, int height,
                                        const FusionParams& params) {
  const Mask raw = rasterize(poly, width, height);
  const Mask closed =
      morphology(raw, MorphOp::kClose, StructuringElement(params.close_kernel), 1);
  Mask kept(width, height);
  bool any = false;
  for (const Mask& c : connected_components(closed)) {
    if (c.count() < static_cast<std::size_t>(params.min_region_area)) continue;
    any = true;
    for (int r = 0; r < height; ++r) {
      for (int col = 0; col < width; ++col) {
        if (c.at(r, col)) kept.set(r, col);
      }
    }
  }
  if (!any) return std::nullopt;
  Ring ring = simplify_polygon(trace_largest_contour(kept), params.eps_ratio);
  if (ring.size() < 3) return std::nullopt;
  return ring;
}

std::vector<ScoredPolygon> average_mask_ensemble(const std::vector<ProbMask>& masks,
                                                 const FusionParams& params) {
  require_same_size(masks);
  const int w = masks.front().width();
  const int h = masks.front().height();
  ProbMask mean(w, h);
  const double k = static_cast<double>(masks.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double sum = 0.0;
      for (const ProbMask& m : masks) sum += m.at(r, c);
      mean.set(r, c, std::clamp(sum / k, 0.0, 1.0));
    }
  }
  std::vector<ScoredPolygon> out;
  for (const Mask& comp : connected_components(mean.binarize(params.ensemble_threshold))) {
    const std::size_t area = comp.count();
    if (area < static_cast<std::size_t>(params.ensemble_min_area)) continue;
    double sum = 0.0;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (comp.at(r, c)) sum += mean.at(r, c);
      }
    }
    const double score = std::clamp(sum / static_cast<double>(area), 0.0, 1.0);
    out.push_back(scored_polygon(PolygonSet{{trace_outer_contour(comp)}}, score));
  }
  return out;
}

std::vector<ScoredPolygon> detection_guided_filter(std::vector<ScoredPolygon> segs,
                                                   const std::vector<ScoredBox>& dets,
                                                   double iou_thr) {
  std::erase_if(segs, [&](const ScoredPolygon& s) {
    return std::none_of(dets.begin(), dets.end(),
                        [&](const ScoredBox& d) { return box_iou(s.box, d.box) >= iou_thr; });
  });
  return segs;
}

ProbMask soft_mask_merge(const std::vector<ProbMask>& masks, double overlap_gate) {
  require_same_size(masks);
  const std::size_t n = masks.size();
  std::vector<Mask> binary;
  for (const ProbMask& m : masks) binary.push_back(m.binarize(0.5));
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (binary[i].empty() || binary[j].empty()) continue;
      if (mask_iou(binary[i], binary[j]) >= overlap_gate) {
        parent[find_root(parent, j)] = find_root(parent, i);
      }
    }
  }
  const int w = masks.front().width();
  const int h = masks.front().height();
  ProbMask out(w, h);
  for (std::size_t root = 0; root < n; ++root) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (find_root(parent, i) == root) members.push_back(i);
    }
    if (members.empty()) continue;
    const double k = static_cast<double>(members.size());
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double sum = 0.0;
        for (std::size_t i : members) sum += masks[i].at(r, c);
        const double v = std::clamp(sum / k, 0.0, 1.0);
        if (v > out.at(r, c)) out.set(r, c, v);
      }
    }
  }
  return out;
}

}  // namespace ripdet
