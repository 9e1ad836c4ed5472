#include "multifit/quality.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <oneapi/tbb/parallel_for.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "multifit/error.hpp"

namespace multifit {

RankedResiduals RankedResiduals::from(std::vector<double> residuals) {
  RankedResiduals rr;
  rr.rank.resize(residuals.size());
  std::iota(rr.rank.begin(), rr.rank.end(), std::size_t{0});
  std::stable_sort(rr.rank.begin(), rr.rank.end(), [&](std::size_t a, std::size_t b) {
    return residuals[a] < residuals[b];
  });
  rr.residuals = std::move(residuals);
  return rr;
}

RankedResiduals rank_residuals(const Hypothesis& h,
                               std::span<const Correspondence> corrs) {
  return RankedResiduals::from(residuals(h, corrs));
}

MhuConfig MhuConfig::for_data(std::size_t n, ModelKind kind,
                              double support_fraction) {
  if (!(support_fraction > 0.0 && support_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "support fraction must be in (0, 1]");
  }
  MhuConfig cfg;
  const auto from_fraction =
      static_cast<std::size_t>(std::ceil(support_fraction * static_cast<double>(n)));
  cfg.support_size = std::max(from_fraction, stable_sample_size(kind));
  return cfg;
}

double epanechnikov(double lambda) {
  return std::abs(lambda) <= 1.0 ? 0.75 * (1.0 - lambda * lambda) : 0.0;
}

const KernelConstants& kernel_constants() {
  static const KernelConstants constants = [] {
    using Quadrature = boost::math::quadrature::gauss_kronrod<double, 15>;
    const double squared = Quadrature::integrate(
        [](double x) { return epanechnikov(x) * epanechnikov(x); }, -1.0, 1.0);
    const double moment = Quadrature::integrate(
        [](double x) { return x * x * epanechnikov(x); }, -1.0, 1.0);
    return KernelConstants{squared, moment,
                           std::pow(243.0 * squared / (35.0 * moment), 0.2)};
  }();
  return constants;
}

double estimate_scale(const RankedResiduals& rr, std::size_t kappa) {
  const std::size_t n = rr.size();
  if (kappa < 1 || kappa > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "scale quantile " + std::to_string(kappa) + " outside [1, " +
                    std::to_string(n) + "]");
  }
  // kappa == n would put the quantile at infinity; use the midpoint of the
  // last order-statistic cell instead.
  const double fraction = kappa == n ? (static_cast<double>(n) - 0.5) / n
                                     : static_cast<double>(kappa) / n;
  const double q = boost::math::quantile(boost::math::normal(), 0.5 * (1.0 + fraction));
  const double s = rr.residuals[rr.rank[kappa - 1]] / q;
  return std::max(s, kScaleFloor);
}

double bandwidth(double scale, std::size_t n) {
  if (!(scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bandwidth needs a positive scale");
  }
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "bandwidth needs n >= 1");
  const auto& k = kernel_constants();
  return std::pow(243.0 * k.squared_integral /
                      (35.0 * static_cast<double>(n) * k.second_moment),
                  0.2) *
         scale;
}

double kernel_weight(const RankedResiduals& rr, double scale) {
  const std::size_t n = rr.size();
  const double b = bandwidth(scale, n);
  double sum = 0.0;
  for (const std::size_t j : rr.rank) {
    const double lambda = rr.residuals[j] / b;
    if (lambda > 1.0) break;  // ascending order: the rest is outside support
    sum += epanechnikov(lambda);
  }
  return sum / (static_cast<double>(n) * scale * b);
}

namespace {

std::vector<std::size_t> top(std::span<const std::size_t> rank, std::size_t count) {
  std::vector<std::size_t> out(rank.begin(), rank.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t overlap(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return common;
}

}  // namespace

double weigh(Hypothesis& h, const RankedResiduals& rr, std::size_t kappa) {
  const double scale = estimate_scale(rr, kappa);
  const double w = kernel_weight(rr, scale);
  h.scale = scale;
  h.weight = w;
  return w;
}

double weigh(Hypothesis& h, std::span<const Correspondence> corrs,
             std::size_t kappa) {
  return weigh(h, rank_residuals(h, corrs), kappa);
}

bool stop_criterion(std::span<const std::size_t> rank_t,
                    std::span<const std::size_t> rank_t1,
                    std::span<const std::size_t> rank_t2,
                    std::size_t support_size, double epsilon) {
  if (support_size == 0 || support_size > rank_t.size() ||
      support_size > rank_t1.size() || support_size > rank_t2.size()) {
    throw Error(ErrorCode::kInvalidArgument, "support size exceeds ranking length");
  }
  const auto current = top(rank_t, support_size);
  const double denom = static_cast<double>(support_size);
  return static_cast<double>(overlap(current, top(rank_t1, support_size))) / denom > epsilon &&
         static_cast<double>(overlap(current, top(rank_t2, support_size))) / denom > epsilon;
}

Hypothesis mhu_update(const Hypothesis& h, std::span<const Correspondence> corrs,
                      const MhuConfig& cfg, MhuTrace* trace) {
  const std::size_t sample_size = stable_sample_size(h.kind);
  const std::size_t support = cfg.support_size;
  if (support < sample_size || support > corrs.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "support size " + std::to_string(support) + " outside [" +
                    std::to_string(sample_size) + ", " + std::to_string(corrs.size()) + "]");
  }
  if (cfg.t_max < 1) throw Error(ErrorCode::kInvalidArgument, "t_max must be >= 1");

  MhuTrace local;
  Hypothesis current = h;
  Hypothesis best = h;
  double best_weight = 0.0;
  std::array<std::vector<std::size_t>, 3> history;  // rank at t, t-1, t-2

  for (int t = 1;; ++t) {
    RankedResiduals rr;
    try {
      rr = rank_residuals(current, corrs);
    } catch (const Error& e) {
      // A refit produced an unusable model; the initial one must be valid.
      if (t == 1 || e.code() != ErrorCode::kSingularModel) throw;
      local.degenerate = true;
      break;
    }
    local.iterations = t;
    const double w = weigh(current, rr, cfg.kappa());
    if (t == 1 || w > best_weight) {
      best_weight = w;
      best.params = current.params;
      best.sample = current.sample;
      best.weight = current.weight;
      best.scale = current.scale;
      local.best_iteration = t;
    }

    std::rotate(history.rbegin(), history.rbegin() + 1, history.rend());
    history[0] = std::move(rr.rank);
    if (t >= 3 && stop_criterion(history[0], history[1], history[2], support, cfg.epsilon)) {
      local.stopped = true;
      break;
    }
    if (t >= cfg.t_max) break;

    // 1-based ranks n-hat-p-1 .. n-hat, i.e. the last p+2 of the top n-hat.
    const std::span<const std::size_t> window(history[0].data() + (support - sample_size),
                                              sample_size);
    try {
      current = fit_model(h.kind, corrs, window);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateInput) throw;
      local.degenerate = true;
      break;
    }
  }

  if (trace) *trace = local;
  return best;
}

std::vector<Hypothesis> mhu_update_all(std::span<const Hypothesis> hypotheses,
                                       std::span<const Correspondence> corrs,
                                       const MhuConfig& cfg) {
  std::vector<std::optional<Hypothesis>> updated(hypotheses.size());
  tbb::parallel_for(std::size_t{0}, hypotheses.size(), [&](std::size_t i) {
    try {
      updated[i] = mhu_update(hypotheses[i], corrs, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSingularModel) throw;
      spdlog::debug("dropping hypothesis {}: {}", i, e.what());
    }
  });
  std::vector<Hypothesis> out;
  out.reserve(hypotheses.size());
  for (auto& h : updated) {
    if (h) out.push_back(std::move(*h));
  }
  return out;
}

}  // namespace multifit
