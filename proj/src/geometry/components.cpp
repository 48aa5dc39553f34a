#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ripdet/error.hpp"
#include "ripdet/geometry.hpp"

namespace ripdet {

namespace {

constexpr std::array<int, 8> kDr = {-1, 1, 0, 0, -1, -1, 1, 1};
constexpr std::array<int, 8> kDc = {0, 0, -1, 1, -1, 1, -1, 1};

// Labels foreground pixels in raster order of their first pixel; label 0 is
// background. Returns the number of components.
int label_components(const Mask& m, Connectivity conn, std::vector<int>& labels,
                     std::vector<std::size_t>& areas) {
  const int w = m.width();
  const int h = m.height();
  const int neighbours = conn == Connectivity::kEight ? 8 : 4;
  labels.assign(static_cast<std::size_t>(w) * h, 0);
  areas.assign(1, 0);
  std::vector<int> stack;
  int next = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int idx = r * w + c;
      if (!m.at(r, c) || labels[idx] != 0) continue;
      ++next;
      areas.push_back(0);
      labels[idx] = next;
      stack.push_back(idx);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        ++areas[next];
        const int cr = cur / w;
        const int cc = cur % w;
        for (int k = 0; k < neighbours; ++k) {
          const int nr = cr + kDr[k];
          const int nc = cc + kDc[k];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          const int nidx = nr * w + nc;
          if (m.at(nr, nc) && labels[nidx] == 0) {
            labels[nidx] = next;
            stack.push_back(nidx);
          }
        }
      }
    }
  }
  return next;
}

// Outgoing boundary directions, indexed clockwise on screen: east, south,
// west, north.
constexpr std::array<int, 4> kDx = {1, 0, -1, 0};
constexpr std::array<int, 4> kDy = {0, 1, 0, -1};

Ring trace_filled(const Mask& filled, const PixelRect& e) {
  // Vertex grid covering the extent's pixel corners.
  const int vw = e.col1 - e.col0 + 1;
  const int vh = e.row1 - e.row0 + 1;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(vw) * vh, 0);
  auto vid = [&](int x, int y) { return (y - e.row0) * vw + (x - e.col0); };
  auto fg = [&](int r, int c) {
    return r >= 0 && r < filled.height() && c >= 0 && c < filled.width() &&
           filled.at(r, c);
  };
  for (int r = e.row0; r < e.row1; ++r) {
    for (int c = e.col0; c < e.col1; ++c) {
      if (!filled.at(r, c)) continue;
      if (!fg(r - 1, c)) out[vid(c, r)] |= 1u << 0;
      if (!fg(r, c + 1)) out[vid(c + 1, r)] |= 1u << 1;
      if (!fg(r + 1, c)) out[vid(c + 1, r + 1)] |= 1u << 2;
      if (!fg(r, c - 1)) out[vid(c, r + 1)] |= 1u << 3;
    }
  }

  // The first foreground pixel in raster order has a plain corner at its
  // top-left: one edge in (north), one out (east).
  int sx = e.col0;
  const int sy = e.row0;
  while (!filled.at(sy, sx)) ++sx;

  Ring ring;
  int x = sx;
  int y = sy;
  int dir = 0;
  int prev_dir = 3;
  do {
    if (dir != prev_dir) ring.push_back({static_cast<double>(x), static_cast<double>(y)});
    out[vid(x, y)] &= static_cast<std::uint8_t>(~(1u << dir));
    x += kDx[dir];
    y += kDy[dir];
    prev_dir = dir;
    const std::uint8_t options = out[vid(x, y)];
    // At a diagonal pinch prefer the left turn, which keeps walking the
    // outer boundary across the 8-connected joint.
    const int left = (dir + 3) % 4;
    const int right = (dir + 1) % 4;
    if (options & (1u << left)) {
      dir = left;
    } else if (options & (1u << dir)) {
      // straight
    } else if (options & (1u << right)) {
      dir = right;
    } else {
      break;
    }
  } while (!(x == sx && y == sy));
  return ring;
}

}  // namespace

std::vector<Mask> connected_components(const Mask& m, Connectivity conn) {
  std::vector<int> labels;
  std::vector<std::size_t> areas;
  const int n = label_components(m, conn, labels, areas);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 1);
  // Labels are assigned in raster order of each component's first pixel.
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return areas[a] > areas[b]; });
  std::vector<Mask> out;
  out.reserve(order.size());
  std::vector<int> slot(static_cast<std::size_t>(n) + 1, -1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    slot[order[i]] = static_cast<int>(i);
    out.emplace_back(m.width(), m.height());
  }
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      const int label = labels[static_cast<std::size_t>(r) * m.width() + c];
      if (label != 0) out[slot[label]].set(r, c);
    }
  }
  return out;
}

Mask fill_holes(const Mask& m) {
  const int w = m.width();
  const int h = m.height();
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> stack;
  auto seed = [&](int r, int c) {
    const int idx = r * w + c;
    if (!m.at(r, c) && !outside[idx]) {
      outside[idx] = 1;
      stack.push_back(idx);
    }
  };
  for (int c = 0; c < w; ++c) {
    seed(0, c);
    seed(h - 1, c);
  }
  for (int r = 0; r < h; ++r) {
    seed(r, 0);
    seed(r, w - 1);
  }
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    const int r = cur / w;
    const int c = cur % w;
    if (r > 0) seed(r - 1, c);
    if (r + 1 < h) seed(r + 1, c);
    if (c > 0) seed(r, c - 1);
    if (c + 1 < w) seed(r, c + 1);
  }
  Mask filled(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!outside[static_cast<std::size_t>(r) * w + c]) filled.set(r, c);
    }
  }
  return filled;
}

Ring trace_outer_contour(const Mask& component) {
  const PixelRect e = component.extent();
  if (e.empty()) throw Error(ErrorCode::kEmptyMask, "cannot trace an empty mask");
  const Mask filled = fill_holes(component);
  return trace_filled(filled, e);
}

Ring trace_largest_contour(const Mask& m) {
  std::vector<Mask> comps = connected_components(m, Connectivity::kEight);
  if (comps.empty()) throw Error(ErrorCode::kEmptyMask, "cannot trace an empty mask");
  return trace_outer_contour(comps.front());
}

}  // namespace ripdet
