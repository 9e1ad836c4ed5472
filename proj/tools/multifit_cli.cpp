// multifit: superpixel-guided deterministic two-view model fitting.
//
//   multifit fit matches.txt --image view1.ppm --structures 2 --output result.json
//   multifit segment view1.png --superpixels 150 --output seg
//   multifit synth --structures 2 --seed 7 --output scenes/s7
//   multifit eval pred.labels gt.labels
//   multifit bench scenes/ --seeds 50 --output table.csv

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <oneapi/tbb/task_arena.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include "multifit/error.hpp"
#include "multifit/evaluation.hpp"
#include "multifit/image.hpp"
#include "multifit/io.hpp"
#include "multifit/pipeline.hpp"
#include "multifit/superpixel.hpp"

namespace fs = std::filesystem;
using namespace multifit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitModelDeficit = 2;
constexpr int kExitNoHypotheses = 3;

struct FitFlags {
  std::string model = "homography";
  std::size_t structures = 1;
  int superpixels = 150;
  double compactness = 10.0;
  double support_fraction = 0.10;
  double epsilon = 0.8;
  int t_max = 50;
  double inlier_t = 2.5;
  int threads = 0;
  std::string labels_path;

  PipelineConfig config() const {
    PipelineConfig cfg;
    cfg.kind = parse_model_kind(model);
    cfg.structures = structures;
    cfg.superpixels = superpixels;
    cfg.compactness = compactness;
    cfg.support_fraction = support_fraction;
    cfg.epsilon = epsilon;
    cfg.t_max = t_max;
    cfg.inlier_threshold = inlier_t;
    cfg.threads = threads;
    return cfg;
  }
};

void add_fit_flags(CLI::App& cmd, FitFlags& f, bool with_structures) {
  cmd.add_option("--model", f.model, "Model kind")
      ->check(CLI::IsMember({"homography", "fundamental"}))
      ->capture_default_str();
  if (with_structures) {
    cmd.add_option("--structures", f.structures, "Number of model instances l")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
  cmd.add_option("--superpixels", f.superpixels, "SLIC superpixel count M")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--compactness", f.compactness, "SLIC compactness")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--support-frac", f.support_fraction, "Support size as a fraction of n")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd.add_option("--epsilon", f.epsilon, "Ranking overlap needed to stop updating")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd.add_option("--tmax", f.t_max, "Maximum update iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--inlier-t", f.inlier_t, "Inlier threshold in units of the scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--labels", f.labels_path, "Precomputed superpixel map (CSV or 16-bit PGM)")
      ->check(CLI::ExistingFile);
  cmd.add_option("--threads", f.threads, "Worker threads, 0 = auto")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

PipelineInput load_input(const fs::path& corrs, const std::string& image,
                         const FitFlags& flags) {
  PipelineInput input;
  input.correspondences = read_correspondences(corrs);
  if (!flags.labels_path.empty()) {
    input.superpixels = superpixels_from_labels(read_label_grid(flags.labels_path),
                                                flags.superpixels);
  } else if (!image.empty()) {
    input.image = read_image(image);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "fit needs --image or --labels");
  }
  return input;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
}

int exit_code_for(const FitResult& result) {
  return result.model_deficit ? kExitModelDeficit : kExitOk;
}

int run_fit(const std::string& corrs, const std::string& image, const FitFlags& flags,
            const std::string& output, const std::string& labels_out, bool timings) {
  const FitResult result = run_pipeline(load_input(corrs, image, flags), flags.config());
  const std::string text = dump_canonical(to_json(result, timings));
  if (output.empty()) {
    std::cout << text;
  } else {
    write_text(output, text);
  }
  if (!labels_out.empty()) write_labels(labels_out, result.labels);
  spdlog::info("{} model(s), {} -> {} hypotheses, {:.3f} s", result.models.size(),
               result.initial_hypotheses, result.updated_hypotheses, result.timings.total);
  if (result.error) spdlog::info("fitting error {:.2f}%", *result.error);
  return exit_code_for(result);
}

int run_segment(const std::string& image_path, const FitFlags& flags, const std::string& prefix) {
  const RgbImage image = read_image(image_path);
  SlicOptions options;
  options.superpixels = flags.superpixels;
  options.compactness = flags.compactness;
  SuperpixelMap map;
  if (flags.threads > 0) {
    tbb::task_arena arena(flags.threads);
    map = arena.execute([&] { return slic_segment(image, options); });
  } else {
    map = slic_segment(image, options);
  }
  write_label_csv(prefix + ".csv", to_label_grid(map));
  const nlohmann::json meta = {
      {"M_requested", map.requested},
      {"M_actual", map.label_count()},
      {"S", map.interval},
      {"compactness", options.compactness},
  };
  write_text(prefix + ".json", dump_canonical(meta));
  return kExitOk;
}

int run_synth(const SceneSpec& spec, const std::string& prefix) {
  const SyntheticScene scene = generate_scene(spec);
  write_correspondences(prefix + ".txt", scene.correspondences);
  write_ppm(prefix + ".ppm", scene.image);
  write_labels(prefix + ".gt.labels", ground_truth_labels(scene.correspondences));
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : scene.models) {
    std::vector<double> params(m.data(), m.data() + 9);
    // Eigen is column-major; emit row-major.
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) params[3 * r + c] = m(r, c);
    }
    models.push_back(params);
  }
  const nlohmann::json meta = {
      {"model", std::string(to_string(spec.kind))},
      {"structures", spec.structures},
      {"inliers_per_structure", spec.inliers_per_structure},
      {"outlier_fraction", spec.outlier_fraction},
      {"noise_sigma", spec.noise_sigma},
      {"width", spec.width},
      {"height", spec.height},
      {"seed", spec.seed},
      {"models", models},
  };
  write_text(prefix + ".scene.json", dump_canonical(meta));
  return kExitOk;
}

int run_eval(const std::string& pred, const std::string& gt) {
  std::cout << fmt::format("{:.2f}\n", fitting_error(read_labels(pred), read_labels(gt)));
  return kExitOk;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (const double x : v) acc += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(acc / static_cast<double>(v.size()));
  return s;
}

struct BenchFlags {
  int seeds = 50;
  int fit_runs = 5;
  int ransac_iterations = 500;
  double ransac_threshold = 2.0;
  std::uint64_t seed = 0;
};

int run_bench(const std::string& dir, const FitFlags& flags, const BenchFlags& bench,
              const std::string& output) {
  std::vector<fs::path> scenes;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (p.extension() == ".txt" && fs::exists(fs::path(p).replace_extension(".ppm"))) {
      scenes.push_back(p);
    }
  }
  std::sort(scenes.begin(), scenes.end());
  if (scenes.empty()) {
    throw Error(ErrorCode::kIo, "no scene pairs (*.txt + *.ppm) in '" + dir + "'");
  }

  std::ostringstream csv;
  csv << "scene,method,runs,std,avg,time\n";
  using Clock = std::chrono::steady_clock;
  for (const auto& path : scenes) {
    const PipelineInput input = load_input(path, fs::path(path).replace_extension(".ppm").string(), flags);
    const Labeling truth = ground_truth_labels(input.correspondences);
    PipelineConfig cfg = flags.config();
    cfg.structures = static_cast<std::size_t>(
        std::max(1, *std::max_element(truth.begin(), truth.end())));

    std::vector<double> errors;
    double time = 0.0;
    for (int r = 0; r < bench.fit_runs; ++r) {
      try {
        const FitResult result = run_pipeline(input, cfg);
        errors.push_back(result.error.value_or(100.0));
        time += result.timings.total;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoHypotheses) throw;
        errors.push_back(100.0);
      }
    }
    const Summary sdf = summarize(errors);
    const std::string name = path.stem().string();
    csv << fmt::format("{},SDF,{},{:.4f},{:.4f},{:.4f}\n", name, bench.fit_runs, sdf.std,
                       sdf.mean, time / bench.fit_runs);

    errors.clear();
    time = 0.0;
    for (int s = 0; s < bench.seeds; ++s) {
      RansacOptions opts;
      opts.structures = cfg.structures;
      opts.iterations = bench.ransac_iterations;
      opts.inlier_threshold = bench.ransac_threshold;
      opts.seed = bench.seed + static_cast<std::uint64_t>(s);
      const auto start = Clock::now();
      std::vector<Hypothesis> models;
      try {
        models = ransac_baseline(input.correspondences, cfg.kind, opts);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInsufficientData) throw;
      }
      const std::vector<double> thresholds(models.size(), bench.ransac_threshold);
      const Labeling labels = assign_labels(models, input.correspondences, thresholds);
      time += std::chrono::duration<double>(Clock::now() - start).count();
      errors.push_back(fitting_error(labels, truth));
    }
    const Summary ransac = summarize(errors);
    csv << fmt::format("{},RANSAC,{},{:.4f},{:.4f},{:.4f}\n", name, bench.seeds, ransac.std,
                       ransac.mean, time / bench.seeds);
  }
  if (output.empty()) {
    std::cout << csv.str();
  } else {
    write_text(output, csv.str());
  }
  return kExitOk;
}

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("MULTIFIT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
  spdlog::set_pattern("[%l] %v");
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Superpixel-guided deterministic two-view model fitting"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  std::string corrs_path;
  std::string image_path;
  std::string output;
  std::string labels_out;
  auto* fit = app.add_subcommand("fit", "Fit model instances to a correspondence file");
  fit->add_option("correspondences", corrs_path, "x1 y1 x2 y2 score [gt] per line")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--image", image_path, "View-1 image (PPM or PNG)")->check(CLI::ExistingFile);
  fit->add_option("--output", output, "Result JSON path (default: stdout)");
  fit->add_option("--labels-out", labels_out, "Write per-correspondence labels here");
  bool no_timings = false;
  fit->add_flag("--no-timings", no_timings, "Leave the timings block out of the result");
  add_fit_flags(*fit, fit_flags, true);

  auto* segment = app.add_subcommand("segment", "Run SLIC and write a label map");
  segment->add_option("image", image_path, "PPM or PNG image")->required()->check(CLI::ExistingFile);
  segment->add_option("--output", output, "Output prefix (.csv and .json)")->required();
  segment->add_option("--superpixels", fit_flags.superpixels, "Superpixel count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  segment->add_option("--compactness", fit_flags.compactness, "SLIC compactness")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  segment->add_option("--threads", fit_flags.threads, "Worker threads, 0 = auto")
      ->check(CLI::NonNegativeNumber);

  SceneSpec spec;
  std::string synth_model = "homography";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled scene");
  synth->add_option("--model", synth_model, "Model kind")
      ->check(CLI::IsMember({"homography", "fundamental"}))
      ->capture_default_str();
  synth->add_option("--structures", spec.structures, "Structure count")->capture_default_str();
  synth->add_option("--inliers", spec.inliers_per_structure, "Inliers per structure")
      ->capture_default_str();
  synth->add_option("--outlier-frac", spec.outlier_fraction, "Outlier fraction in [0,1)")
      ->capture_default_str();
  synth->add_option("--noise", spec.noise_sigma, "Inlier noise sigma (px)")->capture_default_str();
  synth->add_option("--width", spec.width, "Image width")->capture_default_str();
  synth->add_option("--height", spec.height, "Image height")->capture_default_str();
  synth->add_option("--region-frac", spec.region_fraction, "Structure region size")
      ->capture_default_str();
  synth->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
  synth->add_option("--output", output, "Output prefix")->required();

  std::string pred_path;
  std::string gt_path;
  auto* eval = app.add_subcommand("eval", "Fitting error (%) between two label files");
  eval->add_option("predicted", pred_path)->required()->check(CLI::ExistingFile);
  eval->add_option("truth", gt_path)->required()->check(CLI::ExistingFile);

  FitFlags bench_fit;
  BenchFlags bench_flags;
  std::string bench_dir;
  auto* bench = app.add_subcommand("bench", "Compare the fitter with seeded RANSAC over scenes");
  bench->add_option("directory", bench_dir, "Directory of <name>.txt + <name>.ppm scenes")
      ->required()
      ->check(CLI::ExistingDirectory);
  bench->add_option("--seeds", bench_flags.seeds, "RANSAC runs per scene")->capture_default_str();
  bench->add_option("--fit-runs", bench_flags.fit_runs, "Fitter runs per scene")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--ransac-iters", bench_flags.ransac_iterations, "RANSAC iteration budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--ransac-threshold", bench_flags.ransac_threshold,
                    "RANSAC inlier threshold (px)")
      ->capture_default_str();
  bench->add_option("--seed", bench_flags.seed, "First RANSAC seed")->capture_default_str();
  bench->add_option("--output", output, "CSV path (default: stdout)");
  add_fit_flags(*bench, bench_fit, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitFailure;
  }

  try {
    if (*fit) return run_fit(corrs_path, image_path, fit_flags, output, labels_out, !no_timings);
    if (*segment) return run_segment(image_path, fit_flags, output);
    if (*synth) {
      spec.kind = parse_model_kind(synth_model);
      return run_synth(spec, output);
    }
    if (*eval) return run_eval(pred_path, gt_path);
    if (*bench) return run_bench(bench_dir, bench_fit, bench_flags, output);
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return e.code() == ErrorCode::kNoHypotheses ? kExitNoHypotheses : kExitFailure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
