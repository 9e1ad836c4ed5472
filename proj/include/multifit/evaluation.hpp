#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "multifit/geometry.hpp"
#include "multifit/image.hpp"
#include "multifit/superpixel.hpp"

namespace multifit {

// Per-correspondence label: 0 = outlier, 1..l = model index.
using Labeling = std::vector<int>;

/// Nearest model by residual (lower index on ties), kept only when the
/// residual is within thresholds[k]; otherwise 0.
Labeling assign_labels(std::span<const Hypothesis> models,
                       std::span<const Correspondence> corrs,
                       std::span<const double> thresholds);

/// Same with per-model thresholds threshold * scale(model).
Labeling assign_labels(std::span<const Hypothesis> models,
                       std::span<const Correspondence> corrs, double threshold);

Labeling ground_truth_labels(std::span<const Correspondence> corrs);

/// Percentage of mislabeled points under the best injective matching of
/// predicted structures to ground-truth structures (0 stays 0).
double fitting_error(std::span<const int> predicted, std::span<const int> truth);

struct RansacOptions {
  std::size_t structures = 1;
  int iterations = 500;
  double inlier_threshold = 2.0;  // pixels
  std::uint64_t seed = 0;
};

/// Sequential RANSAC: per structure, uniform minimal samples from the
/// remaining points, keep the largest consensus set, remove it, repeat.
/// Weight holds the inlier count. Throws kInsufficientData when fewer than
/// p points remain.
std::vector<Hypothesis> ransac_baseline(std::span<const Correspondence> corrs,
                                        ModelKind kind, const RansacOptions& options);

struct SceneSpec {
  int structures = 2;
  ModelKind kind = ModelKind::kHomography;
  int inliers_per_structure = 60;
  double outlier_fraction = 0.5;
  double noise_sigma = 1.0;  // px, added to view-2 coordinates of inliers
  int width = 640;
  int height = 480;
  std::uint64_t seed = 0;
  // Side of each structure's square support region relative to its layout
  // cell.
  double region_fraction = 0.5;
};

struct SyntheticScene {
  SceneSpec spec;
  std::vector<Correspondence> correspondences;  // gt_label always set
  std::vector<Matrix3> models;                  // canonical, one per structure
  std::vector<BoundingBox> regions;             // view-1 support per structure
  RgbImage image;                               // textured view 1
};

SyntheticScene generate_scene(const SceneSpec& spec);

}  // namespace multifit
