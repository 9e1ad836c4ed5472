#include "multifit/superpixel.hpp"

#include <oneapi/tbb/blocked_range.h>
#include <oneapi/tbb/parallel_for.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "multifit/error.hpp"

namespace multifit {
namespace {

struct Lab {
  double l, a, b;
};

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kEpsilon = 216.0 / 24389.0;
  constexpr double kKappa = 24389.0 / 27.0;
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

// sRGB -> CIELAB under D65.
std::vector<Lab> to_lab(const RgbImage& image) {
  std::array<double, 256> linear{};
  for (int i = 0; i < 256; ++i) linear[i] = srgb_to_linear(i / 255.0);

  std::vector<Lab> out(image.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = linear[image.data[3 * i]];
    const double g = linear[image.data[3 * i + 1]];
    const double b = linear[image.data[3 * i + 2]];
    const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    const double fx = lab_f(x);
    const double fy = lab_f(y);
    const double fz = lab_f(z);
    out[i] = {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
  }
  return out;
}

double lab_distance2(const Lab& p, const Lab& q) {
  const double dl = p.l - q.l;
  const double da = p.a - q.a;
  const double db = p.b - q.b;
  return dl * dl + da * da + db * db;
}

struct Cluster {
  Lab color;
  double x, y;
};

// Seed counts per axis. The shorter axis is rounded first so the total
// stays within M + O(sqrt(M)) even for very elongated images.
std::pair<int, int> seed_grid(int width, int height, int requested, double s) {
  auto clamp_count = [](double v, int hi) {
    return std::clamp(static_cast<int>(std::lround(v)), 1, hi);
  };
  if (width >= height) {
    const int ny = clamp_count(height / s, height);
    const int nx = clamp_count(static_cast<double>(requested) / ny, width);
    return {nx, ny};
  }
  const int nx = clamp_count(width / s, width);
  const int ny = clamp_count(static_cast<double>(requested) / nx, height);
  return {nx, ny};
}

std::vector<Cluster> initial_clusters(const std::vector<Lab>& lab, int width,
                                      int height, int requested, double s) {
  const auto [nx, ny] = seed_grid(width, height, requested, s);
  auto gradient = [&](int x, int y) {
    const int xm = std::max(x - 1, 0);
    const int xp = std::min(x + 1, width - 1);
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, height - 1);
    const auto idx = [width](int xx, int yy) { return std::size_t(yy) * width + xx; };
    return lab_distance2(lab[idx(xp, y)], lab[idx(xm, y)]) +
           lab_distance2(lab[idx(x, yp)], lab[idx(x, ym)]);
  };

  std::vector<Cluster> clusters;
  clusters.reserve(std::size_t(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int sx = std::min(static_cast<int>((i + 0.5) * width / nx), width - 1);
      const int sy = std::min(static_cast<int>((j + 0.5) * height / ny), height - 1);
      int best_x = sx;
      int best_y = sy;
      double best = std::numeric_limits<double>::infinity();
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = sx + dx;
          const int y = sy + dy;
          if (x < 0 || y < 0 || x >= width || y >= height) continue;
          const double g = gradient(x, y);
          if (g < best) {
            best = g;
            best_x = x;
            best_y = y;
          }
        }
      }
      clusters.push_back({lab[std::size_t(best_y) * width + best_x],
                          static_cast<double>(best_x), static_cast<double>(best_y)});
    }
  }
  return clusters;
}

// Merges 4-connected components smaller than min_size into their largest
// neighbour, visiting components in raster order of their first pixel, then
// relabels regions 0..M'-1 in the same order.
std::vector<int> enforce_connectivity(const std::vector<int>& raw, int width,
                                      int height, double min_size) {
  const std::size_t n = raw.size();
  std::vector<int> comp(n, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t count = 0;
    comp[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++count;
      const int x = static_cast<int>(p % width);
      const int y = static_cast<int>(p / width);
      const std::array<std::pair<int, int>, 4> nbrs{
          {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}}};
      for (const auto& [nx, ny] : nbrs) {
        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const std::size_t q = std::size_t(ny) * width + nx;
        if (comp[q] < 0 && raw[q] == raw[p]) {
          comp[q] = id;
          stack.push_back(q);
        }
      }
    }
    sizes.push_back(count);
  }

  const std::size_t components = sizes.size();
  std::vector<std::set<int>> adjacent(components);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t p = std::size_t(y) * width + x;
      if (x + 1 < width && comp[p] != comp[p + 1]) {
        adjacent[comp[p]].insert(comp[p + 1]);
        adjacent[comp[p + 1]].insert(comp[p]);
      }
      if (y + 1 < height && comp[p] != comp[p + width]) {
        adjacent[comp[p]].insert(comp[p + width]);
        adjacent[comp[p + width]].insert(comp[p]);
      }
    }
  }

  std::vector<int> parent(components);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int c) {
    while (parent[c] != c) {
      parent[c] = parent[parent[c]];
      c = parent[c];
    }
    return c;
  };

  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t c = 0; c < components; ++c) {
      const int root = static_cast<int>(c);
      if (parent[root] != root || static_cast<double>(sizes[root]) >= min_size) {
        continue;
      }
      int target = -1;
      for (const int other : adjacent[root]) {
        const int r = find(other);
        if (r == root) continue;
        if (target < 0 || sizes[r] > sizes[target] ||
            (sizes[r] == sizes[target] && r < target)) {
          target = r;
        }
      }
      if (target < 0) continue;
      parent[root] = target;
      sizes[target] += sizes[root];
      adjacent[target].insert(adjacent[root].begin(), adjacent[root].end());
      adjacent[root].clear();
      merged = true;
    }
  }

  std::vector<int> relabel(components, -1);
  int next = 0;
  std::vector<int> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    const int r = find(comp[p]);
    if (relabel[r] < 0) relabel[r] = next++;
    out[p] = relabel[r];
  }
  return out;
}

SuperpixelMap finalize(int width, int height, std::vector<int> labels,
                       int requested) {
  SuperpixelMap map;
  map.width = width;
  map.height = height;
  map.requested = requested;
  map.interval = grid_interval(labels.size(), static_cast<std::size_t>(requested));

  const int count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<double> sx(count, 0.0);
  std::vector<double> sy(count, 0.0);
  std::vector<std::size_t> pixels(count, 0);
  map.boxes.assign(count, BoundingBox{width, height, -1, -1});
  std::vector<std::set<int>> adjacent(count);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t p = std::size_t(y) * width + x;
      const int l = labels[p];
      sx[l] += x;
      sy[l] += y;
      ++pixels[l];
      map.boxes[l].expand(x, y);
      if (x + 1 < width && labels[p + 1] != l) {
        adjacent[l].insert(labels[p + 1]);
        adjacent[labels[p + 1]].insert(l);
      }
      if (y + 1 < height && labels[p + width] != l) {
        adjacent[l].insert(labels[p + width]);
        adjacent[labels[p + width]].insert(l);
      }
    }
  }
  map.centers.resize(count);
  map.adjacency.resize(count);
  for (int l = 0; l < count; ++l) {
    const double w = pixels[l] ? static_cast<double>(pixels[l]) : 1.0;
    map.centers[l] = {sx[l] / w, sy[l] / w};
    map.adjacency[l].assign(adjacent[l].begin(), adjacent[l].end());
  }
  map.labels = std::move(labels);
  return map;
}

}  // namespace

void BoundingBox::expand(int x, int y) {
  if (x1 < x0) {
    x0 = x1 = x;
    y0 = y1 = y;
    return;
  }
  x0 = std::min(x0, x);
  y0 = std::min(y0, y);
  x1 = std::max(x1, x);
  y1 = std::max(y1, y);
}

BoundingBox BoundingBox::united(const BoundingBox& other) const {
  return {std::min(x0, other.x0), std::min(y0, other.y0),
          std::max(x1, other.x1), std::max(y1, other.y1)};
}

double grid_interval(std::size_t pixels, std::size_t superpixels) {
  if (pixels == 0 || superpixels == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "grid interval needs positive pixel and superpixel counts");
  }
  return std::sqrt(static_cast<double>(pixels) / static_cast<double>(superpixels));
}

SuperpixelMap slic_segment(const RgbImage& image, const SlicOptions& options) {
  const int width = image.width;
  const int height = image.height;
  if (width <= 0 || height <= 0 || image.data.size() != 3 * image.pixel_count()) {
    throw Error(ErrorCode::kInvalidArgument, "empty or malformed image");
  }
  const std::size_t n = image.pixel_count();
  if (options.superpixels < 1 || static_cast<std::size_t>(options.superpixels) > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "superpixel count must be in [1, pixel count]");
  }
  if (!(options.compactness > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "compactness must be positive");
  }

  const double s = grid_interval(n, static_cast<std::size_t>(options.superpixels));
  const std::vector<Lab> lab = to_lab(image);
  std::vector<Cluster> clusters = initial_clusters(lab, width, height, options.superpixels, s);
  const auto k = static_cast<int>(clusters.size());
  const double spatial = (options.compactness / s) * (options.compactness / s);

  std::vector<int> labels(n, -1);
  std::vector<double> dist(n);
  auto distance2 = [&](const Cluster& c, std::size_t p, int x, int y) {
    const double dx = x - c.x;
    const double dy = y - c.y;
    return lab_distance2(lab[p], c.color) + (dx * dx + dy * dy) * spatial;
  };

  for (int iter = 0; iter < options.iterations; ++iter) {
    std::fill(labels.begin(), labels.end(), -1);
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    // Each row band visits the clusters in label order, so per-pixel results
    // are independent of how rows are split across threads.
    tbb::parallel_for(
        tbb::blocked_range<int>(0, height, 16), [&](const tbb::blocked_range<int>& rows) {
          for (int c = 0; c < k; ++c) {
            const Cluster& cl = clusters[c];
            const int ylo = std::max(rows.begin(), static_cast<int>(std::floor(cl.y - s)));
            const int yhi = std::min(rows.end() - 1, static_cast<int>(std::ceil(cl.y + s)));
            const int xlo = std::max(0, static_cast<int>(std::floor(cl.x - s)));
            const int xhi = std::min(width - 1, static_cast<int>(std::ceil(cl.x + s)));
            for (int y = ylo; y <= yhi; ++y) {
              for (int x = xlo; x <= xhi; ++x) {
                const std::size_t p = std::size_t(y) * width + x;
                const double d = distance2(cl, p, x, y);
                if (d < dist[p]) {
                  dist[p] = d;
                  labels[p] = c;
                }
              }
            }
          }
        });

    std::vector<double> sums(5 * std::size_t(k), 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const int c = labels[p];
      if (c < 0) continue;
      double* acc = &sums[5 * std::size_t(c)];
      acc[0] += lab[p].l;
      acc[1] += lab[p].a;
      acc[2] += lab[p].b;
      acc[3] += static_cast<double>(p % width);
      acc[4] += static_cast<double>(p / width);
      ++counts[c];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double w = static_cast<double>(counts[c]);
      const double* acc = &sums[5 * std::size_t(c)];
      clusters[c] = {{acc[0] / w, acc[1] / w, acc[2] / w}, acc[3] / w, acc[4] / w};
    }
  }

  // Pixels no search window reached take the globally nearest cluster.
  for (std::size_t p = 0; p < n; ++p) {
    if (labels[p] >= 0) continue;
    const int x = static_cast<int>(p % width);
    const int y = static_cast<int>(p / width);
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = distance2(clusters[c], p, x, y);
      if (d < best) {
        best = d;
        labels[p] = c;
      }
    }
  }

  std::vector<int> connected = enforce_connectivity(labels, width, height, s * s / 4.0);
  return finalize(width, height, std::move(connected), options.superpixels);
}

SuperpixelMap superpixels_from_labels(const LabelGrid& grid, int requested) {
  if (grid.width <= 0 || grid.height <= 0 ||
      grid.labels.size() != std::size_t(grid.width) * grid.height) {
    throw Error(ErrorCode::kInvalidArgument, "malformed label grid");
  }
  std::map<int, int> compact;
  for (const int l : grid.labels) {
    if (l < 0) throw Error(ErrorCode::kInvalidArgument, "negative superpixel label");
    compact.emplace(l, 0);
  }
  int next = 0;
  for (auto& [label, id] : compact) id = next++;
  std::vector<int> labels(grid.labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = compact[grid.labels[i]];
  return finalize(grid.width, grid.height, std::move(labels),
                  requested > 0 ? requested : next);
}

int locate(const SuperpixelMap& map, const Point2& p) {
  const double rx = std::round(p.x);
  const double ry = std::round(p.y);
  if (!(rx >= 0.0 && ry >= 0.0 && rx < map.width && ry < map.height)) {
    throw Error(ErrorCode::kOutOfBounds,
                "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                    ") lies outside the " + std::to_string(map.width) + "x" +
                    std::to_string(map.height) + " image");
  }
  return map.label_at(static_cast<int>(rx), static_cast<int>(ry));
}

LabelGrid to_label_grid(const SuperpixelMap& map) {
  return {map.width, map.height, map.labels};
}

}  // namespace multifit
