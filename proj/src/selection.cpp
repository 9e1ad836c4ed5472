#include "multifit/selection.hpp"

#include <algorithm>
#include <string>

#include "multifit/error.hpp"

namespace multifit {

std::vector<std::size_t> inlier_set(const Hypothesis& h,
                                    std::span<const Correspondence> corrs,
                                    double threshold) {
  if (!h.scale) {
    throw Error(ErrorCode::kInvalidArgument, "inlier set needs a weighted hypothesis");
  }
  const double limit = threshold * *h.scale;
  const std::vector<double> r = residuals(h, corrs);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (r[j] <= limit) out.push_back(j);
  }
  return out;
}

bool is_redundant(const Hypothesis& candidate,
                  std::span<const std::size_t> inliers) {
  return std::any_of(candidate.sample.begin(), candidate.sample.end(),
                     [&](std::size_t i) {
                       return std::binary_search(inliers.begin(), inliers.end(), i);
                     });
}

SelectionState select_models(std::span<const Hypothesis> hypotheses,
                             std::span<const Correspondence> corrs,
                             std::size_t structures, double threshold) {
  if (hypotheses.empty()) {
    throw Error(ErrorCode::kNoHypotheses, "model selection got no hypotheses");
  }
  if (structures < 1) {
    throw Error(ErrorCode::kInvalidArgument, "structure count must be >= 1");
  }
  for (const auto& h : hypotheses) {
    if (!h.weight || !h.scale) {
      throw Error(ErrorCode::kInvalidArgument, "model selection needs weighted hypotheses");
    }
  }

  std::vector<std::size_t> remaining(hypotheses.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  SelectionState state;
  for (std::size_t round = 0; round < structures; ++round) {
    if (remaining.empty()) {
      state.model_deficit = true;
      break;
    }
    std::size_t best = remaining.front();
    for (const std::size_t i : remaining) {
      if (*hypotheses[i].weight > *hypotheses[best].weight) best = i;
    }
    std::vector<std::size_t> inliers = inlier_set(hypotheses[best], corrs, threshold);
    std::erase_if(remaining, [&](std::size_t i) {
      return i == best || is_redundant(hypotheses[i], inliers);
    });
    state.selected.push_back(hypotheses[best]);
    state.selected_positions.push_back(best);
    state.inlier_sets.push_back(std::move(inliers));
  }
  for (const std::size_t i : remaining) state.remaining.push_back(hypotheses[i]);
  return state;
}

}  // namespace multifit
