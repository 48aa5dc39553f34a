#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "ripdet/cli.hpp"

namespace ripdet::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;

// std distributions are implementation-defined, so uniforms are mapped by hand
// from the engine's raw output.
class Source {
 public:
  explicit Source(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {
    const int v = lo + static_cast<int>(uniform() * (hi - lo + 1));
    return std::min(v, hi);
  }

 private:
  std::mt19937_64 engine_;
};

double round_to(double v, double step) { return std::round(v / step) * step; }

Ring random_shape(Source& src, int w, int h, double scale) {
  double bw = src.uniform(0.12, 0.45) * w * scale;
  double bh = src.uniform(0.12, 0.45) * h * scale;
  if (src.uniform() < 0.5) {
    bw = std::max(2.0, std::round(bw));
    bh = std::max(2.0, std::round(bh));
    const double x = std::floor(src.uniform(0.0, w - bw));
    const double y = std::floor(src.uniform(0.0, h - bh));
    return {{x, y}, {x + bw, y}, {x + bw, y + bh}, {x, y + bh}};
  }
  // Rotated rectangle whose circumscribed circle fits in the image.
  const double limit = std::min(w, h) / 2.0 - 1.0;
  const double r = std::hypot(bw, bh) / 2.0;
  if (r > limit) {
    bw *= limit / r;
    bh *= limit / r;
  }
  const double rr = std::hypot(bw, bh) / 2.0;
  const double cx = src.uniform(rr, w - rr);
  const double cy = src.uniform(rr, h - rr);
  const double angle = src.uniform(0.0, kPi);
  const double c = std::cos(angle), s = std::sin(angle);
  Ring ring;
  for (const auto& [dx, dy] : {std::pair{-bw / 2, -bh / 2}, std::pair{bw / 2, -bh / 2},
                               std::pair{bw / 2, bh / 2}, std::pair{-bw / 2, bh / 2}}) {
    ring.push_back({round_to(cx + c * dx - s * dy, 0.01), round_to(cy + s * dx + c * dy, 0.01)});
  }
  return ring;
}

Ring perturb(Source& src, const Ring& ring, double p, int w, int h) {
  const BBox box = polygon_to_bbox(PolygonSet{{ring}});
  const double cx = box.x + box.w / 2, cy = box.y + box.h / 2;
  const double dx = (src.uniform() - 0.5) * p * box.w;
  const double dy = (src.uniform() - 0.5) * p * box.h;
  const double scale = 1.0 + (src.uniform() - 0.5) * p;
  Ring out;
  for (const Point& v : ring) {
    const double x = std::clamp(cx + scale * (v.x - cx) + dx, 0.0, static_cast<double>(w));
    const double y = std::clamp(cy + scale * (v.y - cy) + dy, 0.0, static_cast<double>(h));
    out.push_back({round_to(x, 0.01), round_to(y, 0.01)});
  }
  return out;
}

bool usable(const Ring& ring, int w, int h) {
  return std::abs(polygon_area(ring)) > 0.0 && rasterize(ring, w, h).count() > 0;
}

}  // namespace

Fixture generate_fixture(const FixtureSpec& spec) {
  if (spec.images < 0 || spec.instances < 0) {
    throw Error(ErrorCode::kInvalidArgument, "fixture sizes must be non-negative");
  }
  if (spec.width < 16 || spec.height < 16) {
    throw Error(ErrorCode::kInvalidArgument, "fixture images must be at least 16 x 16");
  }
  if (!(spec.perturbation >= 0.0 && spec.perturbation <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "perturbation must lie in [0, 1]");
  }
  Source src(spec.seed);
  const int w = spec.width, h = spec.height;
  const double p = spec.perturbation;
  std::vector<ImageRecord> images;
  std::vector<GroundTruthInstance> gts;
  PredictionSet det{Task::kDetection, {}};
  PredictionSet seg{Task::kSegmentation, {}};
  auto add_prediction = [&](std::int64_t image_id, const Ring& ring, double score) {
    const PolygonSet poly{{ring}};
    det.instances.push_back({image_id, 1, score, polygon_to_bbox(poly), det.instances.size()});
    seg.instances.push_back({image_id, 1, score, poly, seg.instances.size()});
  };

  for (int i = 0; i < spec.images; ++i) {
    const std::int64_t image_id = i + 1;
    char name[32];
    std::snprintf(name, sizeof(name), "synthetic_%06d.jpg", i + 1);
    images.push_back({image_id, w, h, name});
    const int k = spec.instances == 0 ? 0 : src.integer(0, spec.instances);
    for (int j = 0; j < k; ++j) {
      const Ring ring = random_shape(src, w, h, 1.0);
      const PolygonSet poly{{ring}};
      gts.push_back({static_cast<std::int64_t>(gts.size() + 1), image_id, 1,
                     polygon_to_bbox(poly), poly});
      if (p == 0.0) {
        add_prediction(image_id, ring, 1.0);
        continue;
      }
      if (src.uniform() < p / 2) continue;  // missed
      const Ring moved = perturb(src, ring, p, w, h);
      const double score = round_to(std::clamp(1.0 - p * src.uniform(), 0.05, 1.0), 0.001);
      if (usable(moved, w, h)) add_prediction(image_id, moved, score);
    }
    if (p > 0.0 && src.uniform() < p) {
      const Ring fp = random_shape(src, w, h, 0.6);
      add_prediction(image_id, fp, round_to(src.uniform(0.05, 0.6), 0.001));
    }
  }
  det.sort();
  seg.sort();
  return {Dataset(std::move(images), std::move(gts), {1, "rip_current"}), std::move(det),
          std::move(seg)};
}

}  // namespace ripdet::cli
