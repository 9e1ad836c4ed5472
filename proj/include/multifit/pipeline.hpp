#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "multifit/evaluation.hpp"
#include "multifit/geometry.hpp"
#include "multifit/image.hpp"
#include "multifit/superpixel.hpp"

namespace multifit {

struct PipelineConfig {
  ModelKind kind = ModelKind::kHomography;
  std::size_t structures = 1;      // l
  int superpixels = 150;           // M
  double compactness = 10.0;
  double support_fraction = 0.10;  // n-hat / n
  double epsilon = 0.8;
  int t_max = 50;
  double inlier_threshold = 2.5;   // T, in units of the inlier scale
  int threads = 0;                 // 0 = TBB default
};

struct PipelineInput {
  std::vector<Correspondence> correspondences;
  std::optional<RgbImage> image;             // segmented with SLIC
  std::optional<SuperpixelMap> superpixels;  // takes precedence over image
};

struct StageTimings {
  double segmentation = 0.0;
  double sampling = 0.0;
  double updating = 0.0;
  double selection = 0.0;
  double labeling = 0.0;
  double total = 0.0;

  double after_segmentation() const { return sampling + updating + selection + labeling; }
};

struct FittedModel {
  Hypothesis hypothesis;
  std::vector<std::size_t> inliers;
};

struct FitResult {
  PipelineConfig config;
  std::vector<FittedModel> models;
  Labeling labels;
  std::optional<double> error;  // when every correspondence has ground truth
  bool model_deficit = false;
  std::size_t initial_hypotheses = 0;
  std::size_t updated_hypotheses = 0;
  std::size_t superpixel_count = 0;
  double grid_interval = 0.0;
  std::size_t support_size = 0;
  StageTimings timings;
};

/// Segment (or take the supplied map), sample, update, select, label and
/// score against ground truth when present. Errors carry the failing stage
/// in their message.
FitResult run_pipeline(const PipelineInput& input, const PipelineConfig& config);

nlohmann::json to_json(const FitResult& result, bool include_timings = true);

/// Sorted keys, 2-space indentation, scalar arrays on one line, floats with
/// 17 significant digits.
std::string dump_canonical(const nlohmann::json& value);

}  // namespace multifit
