#pragma once

// Random datasets and submissions with controlled overlap, for property and
// oracle tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ripdet/coco_io.hpp"

namespace fixtures {

struct Scene {
  ripdet::Dataset dataset;
  ripdet::PredictionSet preds;
};

inline ripdet::Ring rect_ring(double x, double y, double w, double h) {
  return {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}};
}

inline ripdet::Ring rotated_rect(double cx, double cy, double w, double h, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  ripdet::Ring ring;
  for (auto [dx, dy] : {std::pair{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2},
                        {-w / 2, h / 2}}) {
    ring.push_back({cx + c * dx - s * dy, cy + s * dx + c * dy});
  }
  return ring;
}

inline ripdet::BBox hull(const ripdet::Ring& ring) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& p : ring) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

// Up to max_images images of size w x h with up to max_instances GTs each.
// Predictions jitter GT shapes (some heavily), add false positives and drop
// some GTs. Scores are drawn from a coarse grid so ties occur.
inline Scene random_scene(std::mt19937_64& rng, ripdet::Task task, int max_images,
                          int max_instances, int w = 48, int h = 40) {
  std::uniform_int_distribution<int> n_images(1, max_images);
  std::uniform_int_distribution<int> n_inst(0, max_instances);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ripdet::ImageRecord> images;
  std::vector<ripdet::GroundTruthInstance> gts;
  ripdet::PredictionSet preds{task, {}};
  const int images_n = n_images(rng);
  std::int64_t next_ann = 1;
  std::size_t input = 0;
  auto random_shape = [&](double scale) {
    const double bw = 4 + u(rng) * (w / 2.0) * scale;
    const double bh = 4 + u(rng) * (h / 2.0) * scale;
    const double cx = bw / 2 + u(rng) * (w - bw);
    const double cy = bh / 2 + u(rng) * (h - bh);
    if (u(rng) < 0.5) {
      return rect_ring(std::round(cx - bw / 2), std::round(cy - bh / 2), std::round(bw),
                       std::round(bh));
    }
    return rotated_rect(cx, cy, bw, bh, u(rng) * 3.14159);
  };
  auto add_pred = [&](std::int64_t image_id, const ripdet::Ring& ring) {
    ripdet::PredictionInstance p;
    p.image_id = image_id;
    p.category_id = 1;
    p.score = std::round(u(rng) * 10) / 10.0;
    p.input_index = input++;
    if (task == ripdet::Task::kDetection) {
      p.payload = hull(ring);
    } else {
      p.payload = ripdet::PolygonSet{{ring}};
    }
    preds.instances.push_back(std::move(p));
  };
  for (int i = 0; i < images_n; ++i) {
    const std::int64_t image_id = 100 + i * 3;
    images.push_back({image_id, w, h, "img" + std::to_string(i) + ".jpg"});
    const int k = n_inst(rng);
    for (int j = 0; j < k; ++j) {
      ripdet::Ring ring = random_shape(1.0);
      gts.push_back({next_ann, image_id, 1, hull(ring), ripdet::PolygonSet{{ring}}});
      next_ann += 1 + static_cast<std::int64_t>(u(rng) * 3);
      const double roll = u(rng);
      if (roll < 0.15) continue;  // missed
      const double jitter = roll < 0.6 ? 1.0 : 4.0;
      ripdet::Ring moved = ring;
      const double dx = (u(rng) - 0.5) * 2 * jitter, dy = (u(rng) - 0.5) * 2 * jitter;
      for (auto& p : moved) {
        p.x += dx;
        p.y += dy;
      }
      add_pred(image_id, moved);
      if (u(rng) < 0.2) add_pred(image_id, moved);  // duplicate detection
    }
    const int fps = static_cast<int>(u(rng) * 3);
    for (int j = 0; j < fps && static_cast<int>(preds.instances.size()) < 8 * images_n; ++j) {
      add_pred(image_id, random_shape(0.6));
    }
  }
  // Keep the per-image instance cap for exhaustive oracles.
  std::vector<ripdet::PredictionInstance> capped;
  for (const auto& p : preds.instances) {
    const auto same = std::count_if(capped.begin(), capped.end(),
                                    [&](const auto& q) { return q.image_id == p.image_id; });
    if (same < max_instances) capped.push_back(p);
  }
  preds.instances = std::move(capped);
  preds.sort();
  return {ripdet::Dataset(std::move(images), std::move(gts), {1, "rip_current"}),
          std::move(preds)};
}

}  // namespace fixtures
