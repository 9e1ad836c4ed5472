#include "multifit/pipeline.hpp"

#include <oneapi/tbb/task_arena.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "multifit/error.hpp"
#include "multifit/grouping.hpp"
#include "multifit/io.hpp"
#include "multifit/quality.hpp"
#include "multifit/selection.hpp"

namespace multifit {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
auto run_stage(const char* stage, double& elapsed, F&& body) {
  const auto start = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      elapsed = seconds_since(start);
    } else {
      auto out = body();
      elapsed = seconds_since(start);
      return out;
    }
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.what());
  }
}

bool has_ground_truth(const std::vector<Correspondence>& corrs) {
  if (corrs.empty()) return false;
  for (const auto& c : corrs) {
    if (!c.gt_label) return false;
  }
  return true;
}

FitResult run(const PipelineInput& input, const PipelineConfig& config) {
  const auto start = Clock::now();
  const auto& corrs = input.correspondences;
  FitResult result;
  result.config = config;

  const SuperpixelMap map = run_stage("segmentation", result.timings.segmentation, [&] {
    if (input.superpixels) return *input.superpixels;
    if (!input.image) {
      throw Error(ErrorCode::kInvalidArgument, "neither an image nor a label map was given");
    }
    SlicOptions slic;
    slic.superpixels = config.superpixels;
    slic.compactness = config.compactness;
    return slic_segment(*input.image, slic);
  });
  result.superpixel_count = map.label_count();
  result.grid_interval = map.interval;

  const auto initial = run_stage("sampling", result.timings.sampling, [&] {
    return generate_initial_hypotheses(corrs, map, config.kind);
  });
  result.initial_hypotheses = initial.size();

  MhuConfig mhu = MhuConfig::for_data(corrs.size(), config.kind, config.support_fraction);
  mhu.epsilon = config.epsilon;
  mhu.t_max = config.t_max;
  result.support_size = mhu.support_size;
  const auto updated = run_stage("updating", result.timings.updating, [&] {
    return mhu_update_all(initial, corrs, mhu);
  });
  result.updated_hypotheses = updated.size();

  const SelectionState selection = run_stage("selection", result.timings.selection, [&] {
    return select_models(updated, corrs, config.structures, config.inlier_threshold);
  });
  result.model_deficit = selection.model_deficit;
  if (selection.model_deficit) {
    spdlog::warn("only {} of {} structures could be selected", selection.selected.size(),
                 config.structures);
  }

  run_stage("labeling", result.timings.labeling, [&] {
    result.labels = assign_labels(selection.selected, corrs, config.inlier_threshold);
    if (has_ground_truth(corrs)) {
      result.error = fitting_error(result.labels, ground_truth_labels(corrs));
    }
  });
  for (std::size_t i = 0; i < selection.selected.size(); ++i) {
    result.models.push_back({selection.selected[i], selection.inlier_sets[i]});
  }
  result.timings.total = seconds_since(start);
  return result;
}

void dump(const nlohmann::json& v, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + "  " + nlohmann::json(key).dump() + ": ";
        dump(item, indent + 1, out);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      const bool scalars = std::none_of(v.begin(), v.end(), [](const auto& e) {
        return e.is_object() || e.is_array();
      });
      if (v.empty() || scalars) {
        out += "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ", ";
          dump(v[i], indent, out);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad + "  ";
        dump(v[i], indent + 1, out);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

FitResult run_pipeline(const PipelineInput& input, const PipelineConfig& config) {
  if (config.structures < 1) {
    throw Error(ErrorCode::kInvalidArgument, "structure count must be >= 1");
  }
  if (config.threads < 0) throw Error(ErrorCode::kInvalidArgument, "threads must be >= 0");
  if (config.threads == 0) return run(input, config);
  tbb::task_arena arena(config.threads);
  return arena.execute([&] { return run(input, config); });
}

nlohmann::json to_json(const FitResult& result, bool include_timings) {
  using nlohmann::json;
  const PipelineConfig& c = result.config;
  json out;
  out["config"] = {
      {"model", std::string(to_string(c.kind))},
      {"structures", c.structures},
      {"superpixels", c.superpixels},
      {"compactness", c.compactness},
      {"support_fraction", c.support_fraction},
      {"epsilon", c.epsilon},
      {"t_max", c.t_max},
      {"inlier_threshold", c.inlier_threshold},
  };
  json models = json::array();
  for (const auto& m : result.models) {
    const Hypothesis& h = m.hypothesis;
    json params = json::array();
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) params.push_back(h.params(r, col));
    }
    models.push_back({
        {"kind", std::string(to_string(h.kind))},
        {"params", params},
        {"weight", h.weight ? json(*h.weight) : json()},
        {"scale", h.scale ? json(*h.scale) : json()},
        {"inliers", m.inliers},
        {"sample", h.sample},
    });
  }
  out["models"] = std::move(models);
  out["labels"] = result.labels;
  out["error"] = result.error ? json(*result.error) : json();
  out["model_deficit"] = result.model_deficit;
  out["stats"] = {
      {"initial_hypotheses", result.initial_hypotheses},
      {"updated_hypotheses", result.updated_hypotheses},
      {"superpixels", result.superpixel_count},
      {"grid_interval", result.grid_interval},
      {"support_size", result.support_size},
  };
  if (include_timings) {
    const StageTimings& t = result.timings;
    out["timings"] = {
        {"segmentation", t.segmentation}, {"sampling", t.sampling},
        {"updating", t.updating},         {"selection", t.selection},
        {"labeling", t.labeling},         {"total", t.total},
    };
  }
  return out;
}

std::string dump_canonical(const nlohmann::json& value) {
  std::string out;
  dump(value, 0, out);
  out += '\n';
  return out;
}

}  // namespace multifit
