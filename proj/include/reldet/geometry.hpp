#pragma once

#include <algorithm>
#include <cmath>

namespace reldet {

// Axis-aligned bounding box in center/size form, pixel units.
// Valid boxes have w > 0 and h > 0.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x_min() const { return cx - w / 2.0; }
  double x_max() const { return cx + w / 2.0; }
  double y_min() const { return cy - h / 2.0; }
  double y_max() const { return cy + h / 2.0; }
  double area() const { return w * h; }

  static Box from_corners(double x0, double y0, double x1, double y1) {
    return Box{(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

// Intersection over union; 0 for disjoint boxes.
inline double iou(const Box& a, const Box& b) {
  double ix = std::max(0.0, std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min()));
  double iy = std::max(0.0, std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min()));
  double inter = ix * iy;
  double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Tightest axis-aligned box covering both inputs.
inline Box union_box(const Box& a, const Box& b) {
  return Box::from_corners(std::min(a.x_min(), b.x_min()), std::min(a.y_min(), b.y_min()),
                           std::max(a.x_max(), b.x_max()), std::max(a.y_max(), b.y_max()));
}

// Euclidean distance between box centers.
inline double center_distance(const Box& a, const Box& b) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

}  // namespace reldet
