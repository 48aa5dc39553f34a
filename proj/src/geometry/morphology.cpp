#include <algorithm>
#include <string>
#include <vector>

#include "ripdet/error.hpp"
#include "ripdet/geometry.hpp"

namespace ripdet {

namespace {

// One separable pass of a (2r+1)-long window along rows (horizontal) or
// columns. Erosion requires the whole window inside the grid and set;
// dilation needs one set pixel among the in-grid part of the window.
Mask window_pass(const Mask& in, int radius, bool horizontal, bool erode) {
  const int w = in.width();
  const int h = in.height();
  const int lines = horizontal ? h : w;
  const int len = horizontal ? w : h;
  Mask out(w, h);
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  for (int line = 0; line < lines; ++line) {
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) {
      const bool v = horizontal ? in.at(line, i) : in.at(i, line);
      prefix[i + 1] = prefix[i] + (v ? 1 : 0);
    }
    for (int i = 0; i < len; ++i) {
      bool v;
      if (erode) {
        v = i - radius >= 0 && i + radius < len &&
            prefix[i + radius + 1] - prefix[i - radius] == 2 * radius + 1;
      } else {
        const int lo = std::max(0, i - radius);
        const int hi = std::min(len - 1, i + radius);
        v = prefix[hi + 1] - prefix[lo] > 0;
      }
      if (v) {
        if (horizontal) {
          out.set(line, i);
        } else {
          out.set(i, line);
        }
      }
    }
  }
  return out;
}

}  // namespace

Mask erode(const Mask& m, const StructuringElement& se) {
  if (se.radius() == 0) return m;
  return window_pass(window_pass(m, se.radius(), true, true), se.radius(), false, true);
}

Mask dilate(const Mask& m, const StructuringElement& se) {
  if (se.radius() == 0) return m;
  return window_pass(window_pass(m, se.radius(), true, false), se.radius(), false, false);
}

Mask morphology(const Mask& m, MorphOp op, const StructuringElement& se,
                int iterations) {
  if (iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "morphology iterations must be >= 1, got " + std::to_string(iterations));
  }
  Mask out = m;
  if (op == MorphOp::kOpen) {
    for (int i = 0; i < iterations; ++i) out = erode(out, se);
    for (int i = 0; i < iterations; ++i) out = dilate(out, se);
  } else {
    for (int i = 0; i < iterations; ++i) out = dilate(out, se);
    for (int i = 0; i < iterations; ++i) out = erode(out, se);
  }
  return out;
}

}  // namespace ripdet
