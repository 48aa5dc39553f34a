#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ripdet {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// A closed polygon ring; the closing edge from back() to front() is implicit.
using Ring = std::vector<Point>;

struct PolygonSet {
  std::vector<Ring> rings;

  friend bool operator==(const PolygonSet&, const PolygonSet&) = default;
};

// COCO convention: top-left corner plus extent, in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Half-open pixel rectangle [col0, col1) x [row0, row1); empty when either
// extent is zero.
struct PixelRect {
  int col0 = 0;
  int row0 = 0;
  int col1 = 0;
  int row1 = 0;

  bool empty() const { return col1 <= col0 || row1 <= row0; }
};

// Row-major binary raster at image resolution.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return count() == 0; }

  bool at(int row, int col) const {
    return bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(int row, int col, bool value = true) {
    bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }

  std::size_t count() const;
  // Tight rectangle around the set pixels.
  PixelRect extent() const;

  std::span<const std::uint8_t> row(int r) const {
    return {bits_.data() + static_cast<std::size_t>(r) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<std::uint8_t> row(int r) {
    return {bits_.data() + static_cast<std::size_t>(r) * width_,
            static_cast<std::size_t>(width_)};
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Square k x k structuring element anchored at its center.
class StructuringElement {
 public:
  explicit StructuringElement(int size);

  int size() const { return size_; }
  int radius() const { return size_ / 2; }

 private:
  int size_;
};

enum class Connectivity { kFour = 4, kEight = 8 };
enum class MorphOp { kOpen, kClose };

// Polygon measures. All throw Error(kDegenerateRing) on rings with fewer than
// three vertices.
double polygon_area(const Ring& ring);
double polygon_perimeter(const Ring& ring);
BBox polygon_to_bbox(const PolygonSet& poly);

// Pixel (row i, col j) is set iff its center (j + 0.5, i + 0.5) lies inside
// at least one ring under the even-odd rule. Rings are unioned.
Mask rasterize(const PolygonSet& poly, int width, int height);
Mask rasterize(const Ring& ring, int width, int height);

double mask_iou(const Mask& a, const Mask& b);
// Intersection pixel count of two masks of equal size, restricted to the
// overlap of the given extents.
std::size_t mask_intersection(const Mask& a, const PixelRect& ea, const Mask& b,
                              const PixelRect& eb);

double box_intersection(const BBox& a, const BBox& b);
double box_iou(const BBox& a, const BBox& b);
// Intersection divided by the area of `b`.
double box_ioa(const BBox& a, const BBox& b);

// Sorted by descending area, ties by the first set pixel in raster order.
std::vector<Mask> connected_components(const Mask& m,
                                       Connectivity conn = Connectivity::kEight);

Mask erode(const Mask& m, const StructuringElement& se);
Mask dilate(const Mask& m, const StructuringElement& se);
// `iterations` erosions followed by as many dilations (open), or the reverse
// (close). Out-of-grid pixels are background for erosion and ignored for
// dilation.
Mask morphology(const Mask& m, MorphOp op, const StructuringElement& se,
                int iterations = 1);

// Fills every background region not 4-connected to the image border.
Mask fill_holes(const Mask& m);

// Outer boundary of the largest 8-connected component, traced along pixel
// corners with positive signed area. Holes are not represented, so
// rasterizing the ring gives the hole-filled component.
Ring trace_largest_contour(const Mask& m);
// Same tracing, applied to a mask that must hold exactly one component.
Ring trace_outer_contour(const Mask& component);

// Closed-ring Ramer-Douglas-Peucker with epsilon = ratio * perimeter.
Ring simplify_polygon(const Ring& ring, double epsilon_ratio);

// Inclusive pixel extents: a single pixel yields a 1 x 1 box.
BBox mask_to_bbox(const Mask& m);

}  // namespace ripdet
