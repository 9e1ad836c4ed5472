#pragma once

#include <cstddef>
#include <vector>

#include "multifit/geometry.hpp"
#include "multifit/image.hpp"

namespace multifit {

// Inclusive pixel bounds.
struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  void expand(int x, int y);
  BoundingBox united(const BoundingBox& other) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct SuperpixelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row-major, values in [0, label_count())
  int requested = 0;        // M
  double interval = 0.0;    // S = sqrt(N / M)
  std::vector<Point2> centers;
  std::vector<BoundingBox> boxes;
  // Sorted, symmetric, irreflexive; 4-connected shared boundary.
  std::vector<std::vector<int>> adjacency;

  std::size_t label_count() const { return centers.size(); }
  std::size_t pixel_count() const { return labels.size(); }
  int label_at(int x, int y) const { return labels[std::size_t(y) * width + x]; }
};

struct SlicOptions {
  int superpixels = 150;
  double compactness = 10.0;
  int iterations = 10;
};

/// S = sqrt(N / M). Throws kInvalidArgument when either count is zero.
double grid_interval(std::size_t pixels, std::size_t superpixels);

/// Deterministic SLIC over CIELAB + xy with connectivity enforcement. The
/// assignment step runs on the current TBB arena; the output does not depend
/// on the thread count.
SuperpixelMap slic_segment(const RgbImage& image, const SlicOptions& options);

/// Wraps an externally computed label grid. Label values are compacted to
/// 0..M'-1 in ascending order; `requested` is used for the grid interval.
SuperpixelMap superpixels_from_labels(const LabelGrid& grid, int requested);

/// Label of the pixel nearest to p. Throws kOutOfBounds outside the image.
int locate(const SuperpixelMap& map, const Point2& p);

LabelGrid to_label_grid(const SuperpixelMap& map);

}  // namespace multifit
