#include <algorithm>
#include <numeric>
#include <tuple>

#include "ripdet/fusion.hpp"

namespace ripdet {

namespace {

bool by_score_desc(const ScoredBox& a, const ScoredBox& b) { return a.score > b.score; }

auto coords(const BBox& b) { return std::tie(b.x, b.y, b.w, b.h); }

struct Member {
  BBox box;
  double score;
  double weight;
  std::size_t model;
};

struct Cluster {
  std::vector<Member> members;
  BBox fused;
};

BBox fuse_coordinates(const std::vector<Member>& members) {
  double total = 0.0;
  for (const Member& m : members) total += m.score * m.weight;
  const bool by_score = total > 0.0;
  if (!by_score) {
    for (const Member& m : members) total += m.weight;
  }
  BBox out{0, 0, 0, 0};
  for (const Member& m : members) {
    const double k = (by_score ? m.score * m.weight : m.weight) / total;
    out.x += k * m.box.x;
    out.y += k * m.box.y;
    out.w += k * m.box.w;
    out.h += k * m.box.h;
  }
  return out;
}

double fuse_score(const std::vector<Member>& members) {
  double num = 0.0;
  double den = 0.0;
  for (const Member& m : members) {
    num += m.weight * m.score;
    den += m.weight;
  }
  return std::clamp(num / den, 0.0, 1.0);
}

}  // namespace

std::vector<ScoredBox> confidence_filter(std::vector<ScoredBox> boxes, double threshold) {
  std::erase_if(boxes, [&](const ScoredBox& b) { return !(b.score >= threshold); });
  return boxes;
}

std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double iou_threshold) {
  std::stable_sort(boxes.begin(), boxes.end(), by_score_desc);
  std::vector<ScoredBox> kept;
  for (const ScoredBox& b : boxes) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const ScoredBox& k) {
      return box_iou(k.box, b.box) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(b);
  }
  return kept;
}

std::vector<ScoredBox> weighted_box_fusion(const std::vector<std::vector<ScoredBox>>& models,
                                           double iou_threshold,
                                           const std::vector<double>& weights) {
  if (models.empty()) throw Error(ErrorCode::kEmptyInput, "box fusion needs at least one model");
  if (weights.size() != models.size()) {
    throw Error(ErrorCode::kWeightMismatch, "one weight per model is required");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::kWeightMismatch, "model weights must be positive");
  }
  std::vector<Member> all;
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (const ScoredBox& b : models[m]) all.push_back({b.box, b.score, weights[m], m});
  }
  std::stable_sort(all.begin(), all.end(), [](const Member& a, const Member& b) {
    if (a.score != b.score) return a.score > b.score;
    return coords(a.box) < coords(b.box);
  });

  std::vector<Cluster> clusters;
  for (const Member& m : all) {
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) {
      return box_iou(c.fused, m.box) >= iou_threshold;
    });
    if (it == clusters.end()) {
      clusters.push_back({{m}, m.box});
    } else {
      it->members.push_back(m);
      it->fused = fuse_coordinates(it->members);
    }
  }

  std::vector<ScoredBox> out;
  out.reserve(clusters.size());
  for (const Cluster& c : clusters) out.push_back({c.fused, fuse_score(c.members)});
  std::stable_sort(out.begin(), out.end(), [](const ScoredBox& a, const ScoredBox& b) {
    if (a.score != b.score) return a.score > b.score;
    return coords(a.box) < coords(b.box);
  });
  return out;
}

std::vector<ScoredBox> weighted_box_fusion(const std::vector<std::vector<ScoredBox>>& models,
                                           double iou_threshold) {
  return weighted_box_fusion(models, iou_threshold, std::vector<double>(models.size(), 1.0));
}

std::vector<ScoredBox> merge_boxes_iou_ioa(std::vector<ScoredBox> boxes, double iou_thr,
                                           double ioa_thr) {
  std::stable_sort(boxes.begin(), boxes.end(), by_score_desc);
  std::vector<ScoredBox> kept;
  for (const ScoredBox& b : boxes) {
    const bool absorbed = std::any_of(kept.begin(), kept.end(), [&](const ScoredBox& k) {
      return box_iou(k.box, b.box) >= iou_thr || box_ioa(k.box, b.box) >= ioa_thr;
    });
    if (!absorbed) kept.push_back(b);
  }
  return kept;
}

std::vector<ScoredBox> cross_model_merge(const std::vector<ScoredBox>& a,
                                         const std::vector<ScoredBox>& b, double iou_thr,
                                         double keep_conf) {
  struct Candidate {
    double iou;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double v = box_iou(a[i].box, b[j].box);
      if (v >= iou_thr) candidates.push_back({v, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.iou != y.iou) return x.iou > y.iou;
    return std::tie(x.i, x.j) < std::tie(y.i, y.j);
  });
  std::vector<bool> used_a(a.size(), false);
  std::vector<bool> used_b(b.size(), false);
  std::vector<ScoredBox> out;
  for (const Candidate& c : candidates) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = true;
    const BBox& p = a[c.i].box;
    const BBox& q = b[c.j].box;
    out.push_back({{(p.x + q.x) / 2, (p.y + q.y) / 2, (p.w + q.w) / 2, (p.h + q.h) / 2},
                   (a[c.i].score + b[c.j].score) / 2});
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!used_a[i] && a[i].score >= keep_conf) out.push_back(a[i]);
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (!used_b[j] && b[j].score >= keep_conf) out.push_back(b[j]);
  }
  std::stable_sort(out.begin(), out.end(), by_score_desc);
  return out;
}

}  // namespace ripdet
