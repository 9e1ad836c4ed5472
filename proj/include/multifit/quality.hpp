#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "multifit/geometry.hpp"

namespace multifit {

struct RankedResiduals {
  std::vector<double> residuals;
  // Indices sorted by ascending residual, ties by ascending index.
  std::vector<std::size_t> rank;

  static RankedResiduals from(std::vector<double> residuals);
  std::size_t size() const { return residuals.size(); }
};

RankedResiduals rank_residuals(const Hypothesis& h,
                               std::span<const Correspondence> corrs);

struct MhuConfig {
  std::size_t support_size = 0;    // n-hat
  double epsilon = 0.8;
  int t_max = 50;
  std::size_t scale_quantile = 0;  // kappa; 0 means use support_size

  /// n-hat = ceil(fraction * n), raised to p+2 when smaller.
  static MhuConfig for_data(std::size_t n, ModelKind kind,
                            double support_fraction = 0.10);
  std::size_t kappa() const { return scale_quantile ? scale_quantile : support_size; }
};

/// Epanechnikov kernel 0.75 (1 - x^2) on [-1, 1].
double epanechnikov(double lambda);

struct KernelConstants {
  double squared_integral;  // integral of EK^2 over [-1, 1]
  double second_moment;     // integral of x^2 EK over [-1, 1]
  double bandwidth_factor;  // (243 * squared_integral / (35 * second_moment))^0.2
};

/// Computed once by Gauss-Kronrod quadrature of the kernel.
const KernelConstants& kernel_constants();

inline constexpr double kScaleFloor = 1e-9;

/// Kappa-th ordered residual divided by the standard normal quantile at
/// (1 + kappa/n) / 2, floored at kScaleFloor.
double estimate_scale(const RankedResiduals& rr, std::size_t kappa);

/// Kernel bandwidth for n residuals at inlier scale s.
double bandwidth(double scale, std::size_t n);

/// (1/n) sum EK(r_j / b) / (s b) with b = bandwidth(s, n).
double kernel_weight(const RankedResiduals& rr, double scale);

/// Kernel density weight at the estimated scale; stores weight and scale on h and returns the
/// weight. Residuals are summed in ascending order so the value does not
/// depend on the order of the correspondence array.
double weigh(Hypothesis& h, const RankedResiduals& rr, std::size_t kappa);
double weigh(Hypothesis& h, std::span<const Correspondence> corrs,
             std::size_t kappa);

/// True when the top-n-hat sets at t, t-1 and t-2 overlap by strictly more
/// than epsilon * n-hat pairwise with the latest one.
bool stop_criterion(std::span<const std::size_t> rank_t,
                    std::span<const std::size_t> rank_t1,
                    std::span<const std::size_t> rank_t2,
                    std::size_t support_size, double epsilon);

struct MhuTrace {
  int iterations = 0;      // residual sweeps performed
  int best_iteration = 0;  // 1-based iteration of the returned iterate
  bool stopped = false;    // stopping criterion fired
  bool degenerate = false; // a refit failed and ended the loop
};

/// Iterative hypothesis update: rank residuals, weigh, stop on ranking
/// agreement, otherwise refit from the p+2 correspondences ranked
/// n-hat-p-1 .. n-hat. Returns the maximum-weight iterate; its sample is the
/// subset that iterate was fitted from.
Hypothesis mhu_update(const Hypothesis& h, std::span<const Correspondence> corrs,
                      const MhuConfig& cfg, MhuTrace* trace = nullptr);

/// mhu_update over every hypothesis; runs in parallel, results in input
/// order.
std::vector<Hypothesis> mhu_update_all(std::span<const Hypothesis> hypotheses,
                                       std::span<const Correspondence> corrs,
                                       const MhuConfig& cfg);

}  // namespace multifit
