#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "multifit/geometry.hpp"

namespace multifit {

struct SelectionState {
  std::vector<Hypothesis> remaining;
  std::vector<Hypothesis> selected;
  std::vector<std::vector<std::size_t>> inlier_sets;  // one per selected
  std::vector<std::size_t> selected_positions;        // indices into the input
  bool model_deficit = false;  // ran out of hypotheses before l selections
};

/// {j : residual(h, corrs[j]) <= threshold * scale(h)}, ascending.
std::vector<std::size_t> inlier_set(const Hypothesis& h,
                                    std::span<const Correspondence> corrs,
                                    double threshold);

/// A candidate is redundant for a selected model when its sampled subset
/// contains any of the selected model's inliers. `inliers` must be sorted.
bool is_redundant(const Hypothesis& candidate,
                  std::span<const std::size_t> inliers);

/// Fit-and-remove over hypotheses: l times, take the highest weight
/// (earliest on ties) and drop it together with every hypothesis redundant
/// for it. Throws kNoHypotheses on empty input.
SelectionState select_models(std::span<const Hypothesis> hypotheses,
                             std::span<const Correspondence> corrs,
                             std::size_t structures, double threshold);

}  // namespace multifit
