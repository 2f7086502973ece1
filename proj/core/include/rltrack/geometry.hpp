#ifndef RLTRACK_GEOMETRY_HPP
#define RLTRACK_GEOMETRY_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace rltrack {

// Axis-aligned box in normalized center format (cx, cy, w, h), all four
// values relative to the image size. Ground-truth boxes stay inside [0,1]
// with positive size; predicted boxes may fall outside, and every function
// here stays total on such inputs.
struct BBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

inline Eigen::Vector4d box_to_vec(const BBox& b) {
  return Eigen::Vector4d(b.cx, b.cy, b.w, b.h);
}

inline BBox vec_to_box(const Eigen::Vector4d& v) {
  return BBox{v[0], v[1], v[2], v[3]};
}

// Intersection area over union area. Degenerate boxes (w <= 0 or h <= 0)
// and empty unions score 0 instead of raising. Areas are taken from the
// derived edges so that iou(a, a) is exactly 1 for boxes of positive area.
inline double iou(const BBox& a, const BBox& b) {
  const double ax0 = a.cx - a.w / 2, ax1 = a.cx + a.w / 2;
  const double ay0 = a.cy - a.h / 2, ay1 = a.cy + a.h / 2;
  const double bx0 = b.cx - b.w / 2, bx1 = b.cx + b.w / 2;
  const double by0 = b.cy - b.h / 2, by1 = b.cy + b.h / 2;
  const double aw = ax1 - ax0, ah = ay1 - ay0;
  const double bw = bx1 - bx0, bh = by1 - by0;
  if (aw <= 0.0 || ah <= 0.0 || bw <= 0.0 || bh <= 0.0) return 0.0;
  const double ix = std::min(ax1, bx1) - std::max(ax0, bx0);
  const double iy = std::min(ay1, by1) - std::max(ay0, by0);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = aw * ah + bw * bh - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Euclidean distance between box centers in pixels.
inline double center_error_px(const BBox& a, const BBox& b, double img_w,
                              double img_h) {
  const double dx = (a.cx - b.cx) * img_w;
  const double dy = (a.cy - b.cy) * img_h;
  return std::sqrt(dx * dx + dy * dy);
}

// Dense distance reward for the early training phase:
// -mean(|l - g|) - max(|l - g|) over the four box coordinates.
// Always <= 0, with equality exactly when l == g.
inline double reward_early(const BBox& l, const BBox& g) {
  const Eigen::Array4d d = (box_to_vec(l) - box_to_vec(g)).array().abs();
  return -d.mean() - d.maxCoeff();
}

// Overlap reward for the late training phase.
inline double reward_late(const BBox& l, const BBox& g) { return iou(l, g); }

}  // namespace rltrack

#endif
