#include "multifit/evaluation.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "multifit/error.hpp"

namespace multifit {

Labeling assign_labels(std::span<const Hypothesis> models,
                       std::span<const Correspondence> corrs,
                       std::span<const double> thresholds) {
  if (thresholds.size() != models.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one threshold per model expected");
  }
  std::vector<std::vector<double>> r;
  r.reserve(models.size());
  for (const auto& m : models) r.push_back(residuals(m, corrs));

  Labeling labels(corrs.size(), 0);
  for (std::size_t j = 0; j < corrs.size(); ++j) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < models.size(); ++k) {
      if (r[k][j] < r[best][j]) best = k;
    }
    if (!models.empty() && r[best][j] <= thresholds[best]) {
      labels[j] = static_cast<int>(best) + 1;
    }
  }
  return labels;
}

Labeling assign_labels(std::span<const Hypothesis> models,
                       std::span<const Correspondence> corrs, double threshold) {
  std::vector<double> thresholds;
  thresholds.reserve(models.size());
  for (const auto& m : models) {
    if (!m.scale) {
      throw Error(ErrorCode::kInvalidArgument, "labeling needs models with a scale");
    }
    thresholds.push_back(threshold * *m.scale);
  }
  return assign_labels(models, corrs, thresholds);
}

Labeling ground_truth_labels(std::span<const Correspondence> corrs) {
  Labeling labels;
  labels.reserve(corrs.size());
  for (const auto& c : corrs) {
    if (!c.gt_label) {
      throw Error(ErrorCode::kInvalidArgument, "correspondence without ground truth");
    }
    labels.push_back(*c.gt_label);
  }
  return labels;
}

double fitting_error(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "labelings differ in length (" + std::to_string(predicted.size()) +
                    " vs " + std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) return 0.0;
  const auto negative = [](int v) { return v < 0; };
  if (std::any_of(predicted.begin(), predicted.end(), negative) ||
      std::any_of(truth.begin(), truth.end(), negative)) {
    throw Error(ErrorCode::kInvalidArgument, "labels must be non-negative");
  }
  const int lp = *std::max_element(predicted.begin(), predicted.end());
  const int lg = *std::max_element(truth.begin(), truth.end());

  std::vector<std::vector<std::size_t>> confusion(lp + 1, std::vector<std::size_t>(lg + 1, 0));
  for (std::size_t j = 0; j < predicted.size(); ++j) ++confusion[predicted[j]][truth[j]];

  // Exhaustive injective assignment; a predicted structure may also stay
  // unmatched, in which case all of its points count as mislabeled.
  std::vector<bool> used(lg + 1, false);
  std::size_t best = 0;
  std::function<void(int, std::size_t)> search = [&](int k, std::size_t correct) {
    if (k > lp) {
      best = std::max(best, correct);
      return;
    }
    search(k + 1, correct);
    for (int g = 1; g <= lg; ++g) {
      if (used[g]) continue;
      used[g] = true;
      search(k + 1, correct + confusion[k][g]);
      used[g] = false;
    }
  };
  search(1, confusion[0][0]);

  const auto n = static_cast<double>(predicted.size());
  return 100.0 * (n - static_cast<double>(best)) / n;
}

std::vector<Hypothesis> ransac_baseline(std::span<const Correspondence> corrs,
                                        ModelKind kind, const RansacOptions& options) {
  if (options.iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "RANSAC needs at least one iteration");
  }
  const std::size_t p = minimal_sample_size(kind);
  std::mt19937_64 rng(options.seed);

  std::vector<std::size_t> remaining(corrs.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  std::vector<Hypothesis> models;
  for (std::size_t s = 0; s < options.structures; ++s) {
    if (remaining.size() < p) {
      throw Error(ErrorCode::kInsufficientData,
                  std::to_string(remaining.size()) + " points left for structure " +
                      std::to_string(s + 1) + ", need " + std::to_string(p));
    }
    std::vector<Correspondence> pool_corrs;
    pool_corrs.reserve(remaining.size());
    for (const std::size_t i : remaining) pool_corrs.push_back(corrs[i]);

    std::vector<std::size_t> pool = remaining;
    std::optional<Hypothesis> best;
    std::size_t best_count = 0;
    std::vector<std::size_t> sample(p);
    for (int it = 0; it < options.iterations; ++it) {
      for (std::size_t i = 0; i < p; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        sample[i] = pool[i];
      }
      Hypothesis h;
      try {
        h = fit_model(kind, corrs, sample);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateInput) throw;
        continue;
      }
      std::vector<double> r;
      try {
        r = residuals(h, pool_corrs);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSingularModel) throw;
        continue;
      }
      const auto count = static_cast<std::size_t>(std::count_if(
          r.begin(), r.end(), [&](double v) { return v <= options.inlier_threshold; }));
      if (!best || count > best_count) {
        best = std::move(h);
        best_count = count;
      }
    }
    if (!best) break;

    const std::vector<double> r = residuals(*best, pool_corrs);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (r[i] > options.inlier_threshold) kept.push_back(remaining[i]);
    }
    remaining = std::move(kept);
    best->weight = static_cast<double>(best_count);
    models.push_back(std::move(*best));
  }
  return models;
}

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette{{
    {200, 60, 60},
    {60, 170, 70},
    {60, 90, 200},
    {210, 190, 60},
    {160, 70, 190},
    {60, 190, 190},
    {230, 130, 40},
    {120, 120, 40},
}};

Matrix3 translation(double tx, double ty) {
  Matrix3 t = Matrix3::Identity();
  t(0, 2) = tx;
  t(1, 2) = ty;
  return t;
}

Matrix3 skew(const Eigen::Vector3d& v) {
  Matrix3 s;
  s << 0.0, -v(2), v(1), v(2), 0.0, -v(0), -v(1), v(0), 0.0;
  return s;
}

void validate(const SceneSpec& spec) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidSpec, what); };
  if (spec.structures < 1) fail("need at least one structure");
  if (spec.inliers_per_structure < static_cast<int>(stable_sample_size(spec.kind))) {
    fail("each structure needs at least p+2 inliers");
  }
  if (!(spec.outlier_fraction >= 0.0 && spec.outlier_fraction < 1.0)) {
    fail("outlier fraction must be in [0, 1)");
  }
  if (!(spec.noise_sigma >= 0.0)) fail("noise sigma must be non-negative");
  if (spec.width < 16 || spec.height < 16) fail("image must be at least 16x16");
  if (!(spec.region_fraction > 0.0 && spec.region_fraction <= 1.0)) {
    fail("region fraction must be in (0, 1]");
  }
}

}  // namespace

SyntheticScene generate_scene(const SceneSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticScene scene;
  scene.spec = spec;
  const int l = spec.structures;
  const double w = spec.width;
  const double h = spec.height;

  const int cols = static_cast<int>(std::ceil(std::sqrt(l * w / h)));
  const int rows = (l + cols - 1) / cols;
  const double cell_w = w / cols;
  const double cell_h = h / rows;
  const double side = spec.region_fraction * std::min(cell_w, cell_h);
  for (int k = 0; k < l; ++k) {
    const double slack_x = cell_w - side;
    const double slack_y = cell_h - side;
    const double x0 = (k % cols) * cell_w + slack_x * uniform(0.25, 0.75);
    const double y0 = (k / cols) * cell_h + slack_y * uniform(0.25, 0.75);
    scene.regions.push_back({static_cast<int>(x0), static_cast<int>(y0),
                             static_cast<int>(x0 + side) - 1,
                             static_cast<int>(y0 + side) - 1});
  }

  // Intrinsics for the fundamental case.
  Matrix3 camera;
  camera << w, 0.0, w / 2.0, 0.0, w, h / 2.0, 0.0, 0.0, 1.0;
  const Matrix3 camera_inv = camera.inverse();

  struct Motion {
    Matrix3 rotation;
    Eigen::Vector3d translation;
  };
  std::vector<Motion> motions;
  for (int k = 0; k < l; ++k) {
    const double heading = 2.0 * std::numbers::pi * k / l + uniform(-0.5, 0.5);
    if (spec.kind == ModelKind::kHomography) {
      const BoundingBox& box = scene.regions[k];
      const double cx = 0.5 * (box.x0 + box.x1);
      const double cy = 0.5 * (box.y0 + box.y1);
      const double angle = uniform(-0.25, 0.25);
      const double scale = uniform(0.95, 1.05);
      const double shift = uniform(30.0, 80.0);
      Matrix3 a;
      a << scale * std::cos(angle), -scale * std::sin(angle), 0.0,  //
          scale * std::sin(angle), scale * std::cos(angle), 0.0,    //
          uniform(-3e-4, 3e-4), uniform(-3e-4, 3e-4), 1.0;
      const Matrix3 model = translation(cx + shift * std::cos(heading),
                                        cy + shift * std::sin(heading)) *
                            a * translation(-cx, -cy);
      scene.models.push_back(canonicalize(model));
    } else {
      const Eigen::AngleAxisd rx(uniform(-0.08, 0.08), Eigen::Vector3d::UnitX());
      const Eigen::AngleAxisd ry(uniform(-0.08, 0.08), Eigen::Vector3d::UnitY());
      const Eigen::AngleAxisd rz(uniform(-0.08, 0.08), Eigen::Vector3d::UnitZ());
      Motion m;
      m.rotation = (rz * ry * rx).toRotationMatrix();
      m.translation = Eigen::Vector3d(std::cos(heading), std::sin(heading),
                                      uniform(-0.2, 0.2))
                          .normalized() *
                      0.8;
      scene.models.push_back(canonicalize(camera_inv.transpose() * skew(m.translation) *
                                          m.rotation * camera_inv));
      motions.push_back(m);
    }
  }

  std::vector<Correspondence>& corrs = scene.correspondences;
  for (int k = 0; k < l; ++k) {
    const BoundingBox& box = scene.regions[k];
    for (int i = 0; i < spec.inliers_per_structure; ++i) {
      Correspondence c;
      c.p1 = {uniform(box.x0, box.x1), uniform(box.y0, box.y1)};
      if (spec.kind == ModelKind::kHomography) {
        c.p2 = project(scene.models[k], c.p1);
      } else {
        const double depth = uniform(4.0, 8.0);
        const Eigen::Vector3d ray = camera_inv * Eigen::Vector3d(c.p1.x, c.p1.y, 1.0);
        const Eigen::Vector3d moved =
            motions[k].rotation * (depth * ray) + motions[k].translation;
        const Eigen::Vector3d img = camera * moved;
        c.p2 = {img(0) / img(2), img(1) / img(2)};
      }
      c.p2.x += spec.noise_sigma * noise(rng);
      c.p2.y += spec.noise_sigma * noise(rng);
      c.score = uniform(0.6, 1.0);
      c.gt_label = k + 1;
      corrs.push_back(c);
    }
  }

  const double total_inliers = static_cast<double>(l) * spec.inliers_per_structure;
  const auto outliers = static_cast<int>(
      std::lround(total_inliers * spec.outlier_fraction / (1.0 - spec.outlier_fraction)));
  for (int i = 0; i < outliers; ++i) {
    Correspondence c;
    c.p1 = {uniform(0.0, w - 1.0), uniform(0.0, h - 1.0)};
    c.p2 = {uniform(0.0, w - 1.0), uniform(0.0, h - 1.0)};
    c.score = uniform(0.0, 0.7);
    c.gt_label = 0;
    corrs.push_back(c);
  }
  std::shuffle(corrs.begin(), corrs.end(), rng);

  // Textured view 1: noisy grey background, one noisy colour per region.
  scene.image = RgbImage(spec.width, spec.height);
  std::uniform_int_distribution<int> grain(-12, 12);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      std::array<int, 3> color{110, 110, 110};
      for (int k = 0; k < l; ++k) {
        const BoundingBox& box = scene.regions[k];
        if (x >= box.x0 && x <= box.x1 && y >= box.y0 && y <= box.y1) {
          const auto& c = kPalette[k % kPalette.size()];
          color = {c[0], c[1], c[2]};
        }
      }
      std::uint8_t* px = scene.image.at(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        px[ch] = static_cast<std::uint8_t>(std::clamp(color[ch] + grain(rng), 0, 255));
      }
    }
  }
  return scene;
}

}  // namespace multifit
