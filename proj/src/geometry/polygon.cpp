#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ripdet/error.hpp"
#include "ripdet/geometry.hpp"

namespace ripdet {

namespace {

void require_ring(const Ring& ring) {
  if (ring.size() < 3) {
    throw Error(ErrorCode::kDegenerateRing,
                "ring has " + std::to_string(ring.size()) +
                    " vertices, at least 3 required");
  }
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Marks the vertices of the open chain first..last (cyclic indices) that RDP
// keeps. Endpoints are assumed kept by the caller.
void simplify_chain(const Ring& ring, std::size_t first, std::size_t last,
                    double epsilon, std::vector<bool>& keep) {
  const std::size_t n = ring.size();
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    const std::size_t span = (hi + n - lo) % n;
    if (span < 2) continue;
    double worst = -1.0;
    std::size_t worst_idx = lo;
    for (std::size_t k = 1; k < span; ++k) {
      const std::size_t i = (lo + k) % n;
      const double d = segment_distance(ring[i], ring[lo], ring[hi]);
      if (d > worst) {
        worst = d;
        worst_idx = i;
      }
    }
    if (worst > epsilon) {
      keep[worst_idx] = true;
      stack.emplace_back(lo, worst_idx);
      stack.emplace_back(worst_idx, hi);
    }
  }
}

}  // namespace

double polygon_area(const Ring& ring) {
  require_ring(ring);
  double twice = 0.0;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    twice += ring[j].x * ring[i].y - ring[i].x * ring[j].y;
  }
  return std::abs(twice) / 2.0;
}

double polygon_perimeter(const Ring& ring) {
  require_ring(ring);
  double total = 0.0;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    total += std::hypot(ring[i].x - ring[j].x, ring[i].y - ring[j].y);
  }
  return total;
}

BBox polygon_to_bbox(const PolygonSet& poly) {
  if (poly.rings.empty()) {
    throw Error(ErrorCode::kDegenerateRing, "polygon has no rings");
  }
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  for (const Ring& ring : poly.rings) {
    require_ring(ring);
    for (const Point& p : ring) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

Ring simplify_polygon(const Ring& ring, double epsilon_ratio) {
  require_ring(ring);
  if (!(epsilon_ratio >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon ratio must be >= 0");
  }
  if (epsilon_ratio == 0.0) return ring;
  const double epsilon = epsilon_ratio * polygon_perimeter(ring);

  // Anchor on two hull vertices: the lexicographic minimum and the vertex
  // farthest from it. Neither can be an interior point of a straight run.
  const std::size_t n = ring.size();
  std::size_t a = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (ring[i].x < ring[a].x || (ring[i].x == ring[a].x && ring[i].y < ring[a].y)) {
      a = i;
    }
  }
  std::size_t b = a;
  double far = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::hypot(ring[i].x - ring[a].x, ring[i].y - ring[a].y);
    if (d > far) {
      far = d;
      b = i;
    }
  }

  std::vector<bool> keep(n, false);
  keep[a] = true;
  keep[b] = true;
  if (a != b) {
    simplify_chain(ring, a, b, epsilon, keep);
    simplify_chain(ring, b, a, epsilon, keep);
  }

  Ring out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(ring[i]);
  }
  if (out.size() < 3) {
    throw Error(ErrorCode::kDegenerateRing,
                "simplification collapsed ring to " + std::to_string(out.size()) +
                    " vertices");
  }
  return out;
}

}  // namespace ripdet
