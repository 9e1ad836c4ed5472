#include "multifit/geometry.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <string>

#include "multifit/error.hpp"

namespace multifit {
namespace {

// The null space of the design matrix must be one-dimensional: the
// second-smallest singular value has to stay clear of zero relative to the
// largest one.
constexpr double kNullSpaceRatio = 1e-8;
constexpr double kSignEpsilon = 1e-12;

Eigen::Matrix<double, 9, 1> solve_null_vector(Eigen::MatrixXd design,
                                              const char* what) {
  if (design.rows() < 9) {
    const Eigen::Index rows = design.rows();
    design.conservativeResize(9, Eigen::NoChange);
    design.bottomRows(9 - rows).setZero();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || !(sv(7) / sv(0) > kNullSpaceRatio)) {
    throw Error(ErrorCode::kDegenerateInput,
                std::string(what) + ": rank-deficient design matrix");
  }
  return svd.matrixV().col(8);
}

Matrix3 to_matrix(const Eigen::Matrix<double, 9, 1>& v) {
  Matrix3 m;
  m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return m;
}

Matrix3 project_rank2(const Matrix3& f) {
  Eigen::JacobiSVD<Matrix3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sv = svd.singularValues();
  sv(2) = 0.0;
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

void split_views(std::span<const Correspondence> subset,
                 std::vector<Point2>& first, std::vector<Point2>& second) {
  first.reserve(subset.size());
  second.reserve(subset.size());
  for (const auto& c : subset) {
    first.push_back(c.p1);
    second.push_back(c.p2);
  }
}

std::vector<double> homography_residuals(const Matrix3& h,
                                         std::span<const Correspondence> corrs) {
  Eigen::JacobiSVD<Matrix3> svd(h);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(2) / sv(0) < 1e-12) {
    throw Error(ErrorCode::kSingularModel, "homography is not invertible");
  }
  const Matrix3 inverse = h.inverse();

  std::vector<double> out;
  out.reserve(corrs.size());
  for (const auto& c : corrs) {
    const Eigen::Vector3d fwd = h * Eigen::Vector3d(c.p1.x, c.p1.y, 1.0);
    const Eigen::Vector3d bwd = inverse * Eigen::Vector3d(c.p2.x, c.p2.y, 1.0);
    if (fwd(2) == 0.0 || bwd(2) == 0.0) {
      out.push_back(kResidualCap);
      continue;
    }
    const double fx = fwd(0) / fwd(2) - c.p2.x;
    const double fy = fwd(1) / fwd(2) - c.p2.y;
    const double bx = bwd(0) / bwd(2) - c.p1.x;
    const double by = bwd(1) / bwd(2) - c.p1.y;
    const double r = std::sqrt(0.5 * (fx * fx + fy * fy + bx * bx + by * by));
    out.push_back(std::isfinite(r) ? std::min(r, kResidualCap) : kResidualCap);
  }
  return out;
}

double sampson(const Matrix3& f, const Correspondence& c) {
  const Eigen::Vector3d x1(c.p1.x, c.p1.y, 1.0);
  const Eigen::Vector3d x2(c.p2.x, c.p2.y, 1.0);
  const Eigen::Vector3d fx1 = f * x1;
  const Eigen::Vector3d ftx2 = f.transpose() * x2;
  const double algebraic = x2.dot(fx1);
  const double denom = fx1(0) * fx1(0) + fx1(1) * fx1(1) +
                       ftx2(0) * ftx2(0) + ftx2(1) * ftx2(1);
  if (denom == 0.0) return algebraic == 0.0 ? 0.0 : kResidualCap;
  const double r = std::abs(algebraic) / std::sqrt(denom);
  return std::isfinite(r) ? std::min(r, kResidualCap) : kResidualCap;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kHomography ? "homography" : "fundamental";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "homography") return ModelKind::kHomography;
  if (name == "fundamental") return ModelKind::kFundamental;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown model kind '" + std::string(name) + "'");
}

Normalization hartley_normalize(std::span<const Point2> points) {
  if (points.size() < 2) {
    throw Error(ErrorCode::kDegenerateInput,
                "normalization needs at least two points");
  }
  double cx = 0.0;
  double cy = 0.0;
  for (const auto& p : points) {
    cx += p.x;
    cy += p.y;
  }
  const auto n = static_cast<double>(points.size());
  cx /= n;
  cy /= n;

  double mean_dist = 0.0;
  for (const auto& p : points) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= n;
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw Error(ErrorCode::kDegenerateInput, "all points coincide");
  }

  const double s = std::sqrt(2.0) / mean_dist;
  Normalization out;
  out.transform << s, 0.0, -s * cx,  //
      0.0, s, -s * cy,               //
      0.0, 0.0, 1.0;
  out.points.reserve(points.size());
  for (const auto& p : points) {
    out.points.push_back({s * (p.x - cx), s * (p.y - cy)});
  }
  return out;
}

Matrix3 canonicalize(const Matrix3& m) {
  const double norm = m.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kDegenerateInput, "zero or non-finite model");
  }
  Matrix3 out = m / norm;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (std::abs(out(r, c)) > kSignEpsilon) {
        return out(r, c) < 0.0 ? Matrix3(-out) : out;
      }
    }
  }
  return out;
}

Point2 project(const Matrix3& h, const Point2& p) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(p.x, p.y, 1.0);
  return {q(0) / q(2), q(1) / q(2)};
}

Hypothesis fit_homography(std::span<const Correspondence> subset) {
  if (subset.size() < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "homography fit needs at least 4 correspondences");
  }
  std::vector<Point2> first;
  std::vector<Point2> second;
  split_views(subset, first, second);
  const Normalization n1 = hartley_normalize(first);
  const Normalization n2 = hartley_normalize(second);

  const auto rows = static_cast<Eigen::Index>(2 * subset.size());
  Eigen::MatrixXd design(rows, 9);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const double x = n1.points[i].x;
    const double y = n1.points[i].y;
    const double u = n2.points[i].x;
    const double v = n2.points[i].y;
    const auto r = static_cast<Eigen::Index>(2 * i);
    design.row(r) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
    design.row(r + 1) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u;
  }
  const Matrix3 normalized = to_matrix(solve_null_vector(design, "homography"));

  Hypothesis h;
  h.kind = ModelKind::kHomography;
  h.params = canonicalize(n2.transform.inverse() * normalized * n1.transform);
  return h;
}

Hypothesis fit_fundamental(std::span<const Correspondence> subset) {
  if (subset.size() < 8) {
    throw Error(ErrorCode::kInvalidArgument,
                "fundamental fit needs at least 8 correspondences");
  }
  std::vector<Point2> first;
  std::vector<Point2> second;
  split_views(subset, first, second);
  const Normalization n1 = hartley_normalize(first);
  const Normalization n2 = hartley_normalize(second);

  Eigen::MatrixXd design(static_cast<Eigen::Index>(subset.size()), 9);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const double x = n1.points[i].x;
    const double y = n1.points[i].y;
    const double u = n2.points[i].x;
    const double v = n2.points[i].y;
    design.row(static_cast<Eigen::Index>(i)) << u * x, u * y, u, v * x, v * y,
        v, x, y, 1.0;
  }
  const Matrix3 normalized =
      project_rank2(to_matrix(solve_null_vector(design, "fundamental")));
  const Matrix3 pixel =
      n2.transform.transpose() * normalized * n1.transform;

  Hypothesis h;
  h.kind = ModelKind::kFundamental;
  // Denormalization keeps rank 2 only up to rounding; project once more.
  h.params = canonicalize(project_rank2(canonicalize(pixel)));
  return h;
}

Hypothesis fit_model(ModelKind kind, std::span<const Correspondence> subset) {
  return kind == ModelKind::kHomography ? fit_homography(subset)
                                        : fit_fundamental(subset);
}

Hypothesis fit_model(ModelKind kind, std::span<const Correspondence> corrs,
                     std::span<const std::size_t> indices) {
  std::vector<Correspondence> subset;
  subset.reserve(indices.size());
  for (const std::size_t i : indices) {
    if (i >= corrs.size()) {
      throw Error(ErrorCode::kOutOfBounds, "sample index out of range");
    }
    subset.push_back(corrs[i]);
  }
  Hypothesis h = fit_model(kind, subset);
  h.sample.assign(indices.begin(), indices.end());
  return h;
}

double residual(const Hypothesis& h, const Correspondence& c) {
  if (h.kind == ModelKind::kFundamental) return sampson(h.params, c);
  return homography_residuals(h.params, std::span(&c, 1)).front();
}

std::vector<double> residuals(const Hypothesis& h,
                              std::span<const Correspondence> corrs) {
  if (h.kind == ModelKind::kHomography) {
    return homography_residuals(h.params, corrs);
  }
  std::vector<double> out;
  out.reserve(corrs.size());
  for (const auto& c : corrs) out.push_back(sampson(h.params, c));
  return out;
}

}  // namespace multifit
