#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ripdet/error.hpp"
#include "ripdet/geometry.hpp"

namespace ripdet {

namespace {

// Smallest column j with j + 0.5 >= x, evaluated with the same comparison the
// point-in-polygon predicate uses.
long first_center_at_or_after(double x) {
  long j = static_cast<long>(std::ceil(x - 0.5));
  while (static_cast<double>(j - 1) + 0.5 >= x) --j;
  while (static_cast<double>(j) + 0.5 < x) ++j;
  return j;
}

void rasterize_ring_into(const Ring& ring, Mask& mask) {
  if (ring.size() < 3) {
    throw Error(ErrorCode::kDegenerateRing,
                "ring has " + std::to_string(ring.size()) +
                    " vertices, at least 3 required");
  }
  double ymin = ring.front().y;
  double ymax = ymin;
  for (const Point& p : ring) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  if (!std::isfinite(ymin) || !std::isfinite(ymax)) return;

  const int height = mask.height();
  const int width = mask.width();
  const long row_lo = static_cast<long>(std::max(0.0, std::floor(ymin - 0.5)));
  const long row_hi = static_cast<long>(
      std::min(static_cast<double>(height) - 1.0, std::ceil(ymax - 0.5)));
  // Crossings beyond this band resolve to the grid edge either way.
  const double x_lo = -1.0;
  const double x_hi = static_cast<double>(width) + 1.0;

  std::vector<double> crossings;
  for (long r = row_lo; r <= row_hi; ++r) {
    const double y = static_cast<double>(r) + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const Point& pi = ring[i];
      const Point& pj = ring[j];
      if ((pi.y > y) != (pj.y > y)) {
        crossings.push_back((pj.x - pi.x) * (y - pi.y) / (pj.y - pi.y) + pi.x);
      }
    }
    std::sort(crossings.begin(), crossings.end());
    auto row = mask.row(static_cast<int>(r));
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      const double a = std::clamp(crossings[k], x_lo, x_hi);
      const double b = std::clamp(crossings[k + 1], x_lo, x_hi);
      const long c0 = std::max(0L, first_center_at_or_after(a));
      const long c1 = std::min(static_cast<long>(width), first_center_at_or_after(b));
      for (long c = c0; c < c1; ++c) row[static_cast<std::size_t>(c)] = 1;
    }
  }
}

}  // namespace

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "mask dimensions must be positive, got " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

PixelRect Mask::extent() const {
  PixelRect rect{width_, height_, 0, 0};
  for (int r = 0; r < height_; ++r) {
    auto bits = row(r);
    auto first = std::find(bits.begin(), bits.end(), 1);
    if (first == bits.end()) continue;
    auto last = std::find(bits.rbegin(), bits.rend(), 1);
    rect.row0 = std::min(rect.row0, r);
    rect.row1 = r + 1;
    rect.col0 = std::min(rect.col0, static_cast<int>(first - bits.begin()));
    rect.col1 = std::max(rect.col1, static_cast<int>(bits.rend() - last));
  }
  if (rect.row1 == 0) return {};
  return rect;
}

StructuringElement::StructuringElement(int size) : size_(size) {
  if (size < 1 || size % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "structuring element size must be odd and >= 1, got " +
                    std::to_string(size));
  }
}

Mask rasterize(const Ring& ring, int width, int height) {
  Mask mask(width, height);
  rasterize_ring_into(ring, mask);
  return mask;
}

Mask rasterize(const PolygonSet& poly, int width, int height) {
  if (poly.rings.empty()) {
    throw Error(ErrorCode::kDegenerateRing, "polygon has no rings");
  }
  Mask mask(width, height);
  for (const Ring& ring : poly.rings) rasterize_ring_into(ring, mask);
  return mask;
}

std::size_t mask_intersection(const Mask& a, const PixelRect& ea, const Mask& b,
                              const PixelRect& eb) {
  const int r0 = std::max(ea.row0, eb.row0);
  const int r1 = std::min(ea.row1, eb.row1);
  const int c0 = std::max(ea.col0, eb.col0);
  const int c1 = std::min(ea.col1, eb.col1);
  std::size_t inter = 0;
  for (int r = r0; r < r1; ++r) {
    auto ra = a.row(r);
    auto rb = b.row(r);
    for (int c = c0; c < c1; ++c) inter += ra[c] & rb[c];
  }
  return inter;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "mask dimensions differ");
  }
  const std::size_t na = a.count();
  const std::size_t nb = b.count();
  if (na == 0 && nb == 0) return 0.0;
  const std::size_t inter = mask_intersection(a, a.extent(), b, b.extent());
  return static_cast<double>(inter) / static_cast<double>(na + nb - inter);
}

double box_intersection(const BBox& a, const BBox& b) {
  auto overlap = [](double a0, double aw, double b0, double bw) {
    // Containment returns the inner extent verbatim so that intersection
    // never exceeds either area through rounding.
    if (a0 <= b0 && b0 + bw <= a0 + aw) return bw;
    if (b0 <= a0 && a0 + aw <= b0 + bw) return aw;
    const double d = std::min(a0 + aw, b0 + bw) - std::max(a0, b0);
    return std::clamp(d, 0.0, std::min(aw, bw));
  };
  const double iw = overlap(a.x, a.w, b.x, b.w);
  const double ih = overlap(a.y, a.h, b.y, b.h);
  return iw * ih;
}

double box_iou(const BBox& a, const BBox& b) {
  if (a == b) return a.area() > 0.0 ? 1.0 : 0.0;
  const double inter = box_intersection(a, b);
  if (inter <= 0.0) return 0.0;
  const double area_a = a.area();
  const double area_b = b.area();
  const double uni = std::max({(area_a + area_b) - inter, area_a, area_b});
  return std::min(1.0, inter / uni);
}

double box_ioa(const BBox& a, const BBox& b) {
  const double area_b = b.area();
  if (area_b <= 0.0) return 0.0;
  return std::min(1.0, box_intersection(a, b) / area_b);
}

BBox mask_to_bbox(const Mask& m) {
  const PixelRect e = m.extent();
  if (e.empty()) throw Error(ErrorCode::kEmptyMask, "mask has no set pixels");
  return {static_cast<double>(e.col0), static_cast<double>(e.row0),
          static_cast<double>(e.col1 - e.col0), static_cast<double>(e.row1 - e.row0)};
}

}  // namespace ripdet
