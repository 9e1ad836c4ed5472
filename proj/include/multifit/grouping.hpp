#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "multifit/geometry.hpp"
#include "multifit/superpixel.hpp"

namespace multifit {

struct Group {
  std::vector<std::size_t> members;  // ascending correspondence indices
  std::vector<int> superpixels;      // one label, or two for a combined pair
  BoundingBox box;                   // union of the superpixels' boxes
};

/// One group per non-empty superpixel, keyed by the superpixel holding p1,
/// ordered by label.
std::vector<Group> assign_groups(std::span<const Correspondence> corrs,
                                 const SuperpixelMap& map);

/// Pairs every group with each adjacent group whose union box fits in a
/// 2S x 2S square. A group without any qualifying neighbour passes through
/// unchanged. Unordered pairs are emitted once; output is ordered by
/// (min label, max label).
std::vector<Group> combine_groups(std::span<const Group> groups,
                                  const SuperpixelMap& map, double interval);

/// Members by non-ascending matching score; equal scores keep ascending
/// index order.
std::vector<std::size_t> rank_by_score(const Group& group,
                                       std::span<const Correspondence> corrs);

/// Deterministic sampling: group, combine, rank, and fit one hypothesis per
/// combined group from its top p+2 correspondences. Groups that are too
/// small or degenerate are skipped. Throws kNoHypotheses when nothing is
/// left.
std::vector<Hypothesis> generate_initial_hypotheses(
    std::span<const Correspondence> corrs, const SuperpixelMap& map,
    ModelKind kind);

}  // namespace multifit
