#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace multifit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Correspondence {
  Point2 p1;  // view 1
  Point2 p2;  // view 2
  double score = 0.0;
  // 0 = outlier, 1..L = structure id.
  std::optional<int> gt_label;
};

enum class ModelKind { kHomography, kFundamental };

constexpr std::size_t minimal_sample_size(ModelKind kind) {
  return kind == ModelKind::kHomography ? 4 : 8;
}

// Size of the subsets drawn by the deterministic sampler and by MHU refits.
constexpr std::size_t stable_sample_size(ModelKind kind) {
  return minimal_sample_size(kind) + 2;
}

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

using Matrix3 = Eigen::Matrix3d;

struct Hypothesis {
  ModelKind kind = ModelKind::kHomography;
  Matrix3 params = Matrix3::Identity();
  // Indices into the correspondence array the model was sampled from.
  std::vector<std::size_t> sample;
  std::optional<double> weight;
  std::optional<double> scale;
};

struct Normalization {
  Matrix3 transform;
  std::vector<Point2> points;
};

/// Similarity transform moving the centroid to the origin and the mean
/// distance from it to sqrt(2). Throws kDegenerateInput when all points
/// coincide.
Normalization hartley_normalize(std::span<const Point2> points);

/// Normalized DLT. Exactly determined for 4 correspondences, least squares
/// (smallest right singular vector) beyond that.
Hypothesis fit_homography(std::span<const Correspondence> subset);

/// Normalized 8-point algorithm followed by projection onto rank 2.
Hypothesis fit_fundamental(std::span<const Correspondence> subset);

Hypothesis fit_model(ModelKind kind, std::span<const Correspondence> subset);

/// Fits from corrs[indices[0]], corrs[indices[1]], ... and records the
/// indices as the hypothesis sample.
Hypothesis fit_model(ModelKind kind, std::span<const Correspondence> corrs,
                     std::span<const std::size_t> indices);

/// Scales to unit Frobenius norm and makes the first non-negligible entry
/// (row-major) positive.
Matrix3 canonicalize(const Matrix3& m);

Point2 project(const Matrix3& h, const Point2& p);

/// Homography: symmetric transfer distance, the RMS of the forward and
/// backward transfer errors. Fundamental: Sampson distance. Both in pixels.
/// Residuals saturate at kResidualCap (points mapped to infinity).
double residual(const Hypothesis& h, const Correspondence& c);

/// Batched residual; the homography inverse is computed once.
std::vector<double> residuals(const Hypothesis& h,
                              std::span<const Correspondence> corrs);

inline constexpr double kResidualCap = 1e12;

}  // namespace multifit
