#include "multifit/grouping.hpp"

#include <oneapi/tbb/parallel_for.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include "multifit/error.hpp"

namespace multifit {

std::vector<Group> assign_groups(std::span<const Correspondence> corrs,
                                 const SuperpixelMap& map) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    by_label[locate(map, corrs[i].p1)].push_back(i);
  }
  std::vector<Group> groups;
  groups.reserve(by_label.size());
  for (auto& [label, members] : by_label) {
    groups.push_back({std::move(members), {label}, map.boxes[label]});
  }
  return groups;
}

std::vector<Group> combine_groups(std::span<const Group> groups,
                                  const SuperpixelMap& map, double interval) {
  if (!(interval > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "grid interval must be positive");
  }
  std::map<int, const Group*> by_label;
  for (const auto& g : groups) by_label[g.superpixels.front()] = &g;

  const double limit = 2.0 * interval;
  std::map<std::pair<int, int>, Group> out;
  for (const auto& [label, group] : by_label) {
    bool combined = false;
    for (const int other : map.adjacency[label]) {
      const auto it = by_label.find(other);
      if (it == by_label.end()) continue;
      const BoundingBox box = map.boxes[label].united(map.boxes[other]);
      if (box.width() > limit || box.height() > limit) continue;
      combined = true;
      const std::pair key{std::min(label, other), std::max(label, other)};
      if (out.contains(key)) continue;
      Group merged;
      merged.superpixels = {key.first, key.second};
      merged.box = box;
      std::merge(group->members.begin(), group->members.end(),
                 it->second->members.begin(), it->second->members.end(),
                 std::back_inserter(merged.members));
      out.emplace(key, std::move(merged));
    }
    if (!combined) out.emplace(std::pair{label, label}, *group);
  }

  std::vector<Group> result;
  result.reserve(out.size());
  for (auto& [key, g] : out) result.push_back(std::move(g));
  return result;
}

std::vector<std::size_t> rank_by_score(const Group& group,
                                       std::span<const Correspondence> corrs) {
  std::vector<std::size_t> order = group.members;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (corrs[a].score != corrs[b].score) return corrs[a].score > corrs[b].score;
    return a < b;
  });
  return order;
}

std::vector<Hypothesis> generate_initial_hypotheses(
    std::span<const Correspondence> corrs, const SuperpixelMap& map,
    ModelKind kind) {
  const std::vector<Group> groups = assign_groups(corrs, map);
  const std::vector<Group> combined = combine_groups(groups, map, map.interval);
  const std::size_t sample_size = stable_sample_size(kind);

  std::vector<std::optional<Hypothesis>> fitted(combined.size());
  tbb::parallel_for(std::size_t{0}, combined.size(), [&](std::size_t g) {
    if (combined[g].members.size() < sample_size) return;
    std::vector<std::size_t> ranked = rank_by_score(combined[g], corrs);
    ranked.resize(sample_size);
    try {
      fitted[g] = fit_model(kind, corrs, ranked);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateInput) throw;
      spdlog::debug("skipping group {} (superpixels {}): {}", g,
                    combined[g].superpixels.front(), e.what());
    }
  });

  std::vector<Hypothesis> hypotheses;
  for (auto& h : fitted) {
    if (h) hypotheses.push_back(std::move(*h));
  }
  spdlog::debug("{} groups, {} combined, {} hypotheses", groups.size(),
                combined.size(), hypotheses.size());
  if (hypotheses.empty()) {
    throw Error(ErrorCode::kNoHypotheses,
                "no group holds " + std::to_string(sample_size) +
                    " correspondences with a non-degenerate fit");
  }
  return hypotheses;
}

}  // namespace multifit
