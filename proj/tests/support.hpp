#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "multifit/geometry.hpp"
#include "multifit/image.hpp"
#include "multifit/superpixel.hpp"

namespace testing {

using multifit::Correspondence;
using multifit::Matrix3;
using multifit::Point2;

inline Point2 apply(const Matrix3& h, const Point2& p) {
  Eigen::Vector3d v = h * Eigen::Vector3d(p.x, p.y, 1.0);
  return {v.x() / v.z(), v.y() / v.z()};
}

// Ratio-free comparison of two matrices up to scale and sign.
inline double projective_distance(const Matrix3& a, const Matrix3& b) {
  Matrix3 an = a / a.norm();
  Matrix3 bn = b / b.norm();
  return std::min((an - bn).norm(), (an + bn).norm());
}

inline Matrix3 random_homography(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix3 h;
  h << 1.0 + 0.2 * u(rng), 0.2 * u(rng), 40.0 * u(rng),
       0.2 * u(rng), 1.0 + 0.2 * u(rng), 40.0 * u(rng),
       1e-4 * u(rng), 1e-4 * u(rng), 1.0;
  return h;
}

inline std::vector<Correspondence> homography_matches(const Matrix3& h, std::size_t n,
                                                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> px(0.0, 400.0);
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < n; ++i) {
    Point2 p{px(rng), px(rng)};
    out.push_back({p, apply(h, p), 1.0, 1});
  }
  return out;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& t) {
  Eigen::Matrix3d s;
  s << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
  return s;
}

struct Rig {
  Matrix3 f;
  std::vector<Correspondence> matches;
};

// Two pinhole cameras looking at points 4..8 units away.
inline Rig random_rig(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d k;
  k << 500, 0, 320, 0, 500, 240, 0, 0, 1;
  Eigen::Matrix3d r = (Eigen::AngleAxisd(0.1 * u(rng), Eigen::Vector3d::UnitX()) *
                       Eigen::AngleAxisd(0.1 * u(rng), Eigen::Vector3d::UnitY()) *
                       Eigen::AngleAxisd(0.1 * u(rng), Eigen::Vector3d::UnitZ()))
                          .toRotationMatrix();
  Eigen::Vector3d t(1.0, 0.3 * u(rng), 0.2 * u(rng));
  Rig rig;
  Eigen::Matrix3d kinv = k.inverse();
  rig.f = kinv.transpose() * skew(t) * r * kinv;
  std::uniform_real_distribution<double> depth(4.0, 8.0);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d x(2.0 * u(rng), 1.5 * u(rng), depth(rng));
    Eigen::Vector3d a = k * x;
    Eigen::Vector3d b = k * (r * x + t);
    rig.matches.push_back({{a.x() / a.z(), a.y() / a.z()}, {b.x() / b.z(), b.y() / b.z()}, 1.0, 1});
  }
  return rig;
}

inline multifit::LabelGrid grid_of(int w, int h, std::vector<int> labels) {
  return multifit::LabelGrid{w, h, std::move(labels)};
}

// Rectangular tiling of a w x h image into cells of cw x ch pixels.
inline multifit::LabelGrid tiled_grid(int w, int h, int cw, int ch) {
  multifit::LabelGrid g{w, h, std::vector<int>(std::size_t(w) * h)};
  int cols = (w + cw - 1) / cw;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) g.labels[std::size_t(y) * w + x] = (y / ch) * cols + x / cw;
  return g;
}

inline bool label_is_connected(const multifit::SuperpixelMap& map, int label) {
  std::vector<char> seen(map.labels.size(), 0);
  std::size_t total = 0, start = map.labels.size();
  for (std::size_t i = 0; i < map.labels.size(); ++i)
    if (map.labels[i] == label) {
      ++total;
      if (start == map.labels.size()) start = i;
    }
  if (total == 0) return false;
  std::vector<std::size_t> stack{start};
  seen[start] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    ++reached;
    int x = int(i % map.width), y = int(i / map.width);
    const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int nx = x + dx[k], ny = y + dy[k];
      if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height) continue;
      std::size_t j = std::size_t(ny) * map.width + nx;
      if (!seen[j] && map.labels[j] == label) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return reached == total;
}

struct OracleGroup {
  int a;
  int b;
  std::vector<std::size_t> members;
  multifit::BoundingBox box;
};

// Straight enumeration of every label pair, reading adjacency and boxes off
// the raw pixel grid.
inline std::vector<OracleGroup> brute_force_combine(
    const std::map<int, std::vector<std::size_t>>& members, const std::vector<int>& labels,
    int width, int height, double interval) {
  auto box_of = [&](int l) {
    multifit::BoundingBox b;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (labels[std::size_t(y) * width + x] == l) b.expand(x, y);
    return b;
  };
  auto touching = [&](int a, int b) {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        int l = labels[std::size_t(y) * width + x];
        if (l != a && l != b) continue;
        int want = l == a ? b : a;
        if (x + 1 < width && labels[std::size_t(y) * width + x + 1] == want) return true;
        if (y + 1 < height && labels[std::size_t(y + 1) * width + x] == want) return true;
      }
    return false;
  };
  std::vector<OracleGroup> out;
  std::map<int, bool> paired;
  for (auto& [a, ma] : members) {
    for (auto& [b, mb] : members) {
      if (b <= a || !touching(a, b)) continue;
      multifit::BoundingBox u = box_of(a).united(box_of(b));
      if (u.width() > 2 * interval || u.height() > 2 * interval) continue;
      std::vector<std::size_t> all = ma;
      all.insert(all.end(), mb.begin(), mb.end());
      std::sort(all.begin(), all.end());
      out.push_back({a, b, all, u});
      paired[a] = paired[b] = true;
    }
  }
  for (auto& [a, ma] : members)
    if (!paired[a]) out.push_back({a, a, ma, box_of(a)});
  std::sort(out.begin(), out.end(),
            [](const OracleGroup& x, const OracleGroup& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  return out;
}

// Voronoi partition of a w x h image around k random sites.
inline multifit::LabelGrid random_voronoi(int w, int h, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0, w), uy(0, h);
  std::vector<Point2> sites(k);
  for (auto& s : sites) s = {ux(rng), uy(rng)};
  multifit::LabelGrid g{w, h, std::vector<int>(std::size_t(w) * h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int best = 0;
      double bd = INFINITY;
      for (int i = 0; i < k; ++i) {
        double d = std::hypot(x - sites[i].x, y - sites[i].y);
        if (d < bd) {
          bd = d;
          best = i;
        }
      }
      g.labels[std::size_t(y) * w + x] = best;
    }
  return g;
}

struct OracleSelection {
  std::vector<std::size_t> positions;
  std::vector<std::vector<std::size_t>> inliers;
  bool deficit = false;
};

// Straight-line fit-and-remove: pick the heaviest survivor, collect its
// inliers point by point, drop every survivor whose sample meets them.
inline OracleSelection brute_force_select(const std::vector<multifit::Hypothesis>& hyps,
                                          const std::vector<Correspondence>& corrs,
                                          std::size_t l, double threshold) {
  OracleSelection out;
  std::vector<bool> alive(hyps.size(), true);
  for (std::size_t round = 0; round < l; ++round) {
    int best = -1;
    for (std::size_t i = 0; i < hyps.size(); ++i)
      if (alive[i] && (best < 0 || *hyps[i].weight > *hyps[best].weight)) best = int(i);
    if (best < 0) {
      out.deficit = true;
      break;
    }
    std::set<std::size_t> ins;
    for (std::size_t j = 0; j < corrs.size(); ++j)
      if (multifit::residual(hyps[best], corrs[j]) <= threshold * *hyps[best].scale) ins.insert(j);
    alive[best] = false;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      if (!alive[i]) continue;
      std::set<std::size_t> sam(hyps[i].sample.begin(), hyps[i].sample.end());
      std::vector<std::size_t> common;
      std::set_intersection(sam.begin(), sam.end(), ins.begin(), ins.end(), std::back_inserter(common));
      if (!common.empty()) alive[i] = false;
    }
    out.positions.push_back(std::size_t(best));
    out.inliers.emplace_back(ins.begin(), ins.end());
  }
  return out;
}

}  // namespace testing
