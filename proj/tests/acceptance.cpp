// Acceptance suite: one line per criterion, non-zero exit when any fails.

#include <fmt/format.h>
#include <oneapi/tbb/task_arena.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "multifit/evaluation.hpp"
#include "multifit/grouping.hpp"
#include "multifit/pipeline.hpp"
#include "multifit/quality.hpp"
#include "multifit/selection.hpp"
#include "support.hpp"

using namespace multifit;

namespace {

constexpr double kMaxSceneSeconds = 5.0;
constexpr double kIntegralTolerance = 1e-9;
constexpr double kBandwidthTolerance = 1e-4;
constexpr double kHomographyErrorLimit = 5.0;
constexpr double kFundamentalErrorLimit = 10.0;
constexpr int kRansacIterations = 500;
constexpr int kRansacSeeds = 50;
constexpr double kRansacThreshold = 2.0;
constexpr double kRecoveryFraction = 0.90;
constexpr int kRecoverySeedsRequired = 9;
constexpr int kRecoverySeeds = 10;
constexpr std::size_t kMaxOracleHypotheses = 12;
constexpr double kSlicScalingLimit = 5.0;
constexpr int kRandomMaps = 100;
constexpr double kStageScalingLimit = 1.3;
constexpr int kTimingRepeats = 7;

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  fmt::print("[{}] {:2d} {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

double stdev(const std::vector<double>& v) {
  double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double q = 0;
  for (double x : v) q += (x - m) * (x - m);
  return std::sqrt(q / double(v.size()));
}

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), 1e-14, 60);
}

std::string fit_json(const SyntheticScene& scene, std::size_t structures, int threads, double* elapsed) {
  auto start = std::chrono::steady_clock::now();
  PipelineConfig cfg{.kind = scene.spec.kind, .structures = structures, .threads = threads};
  auto r = run_pipeline({scene.correspondences, scene.image, {}}, cfg);
  std::string json = dump_canonical(to_json(r, false));
  if (elapsed) *elapsed = seconds_since(start);
  return json;
}

Outcome determinism() {
  std::vector<SceneSpec> specs{
      SceneSpec{.seed = 1},
      SceneSpec{.seed = 2},
      SceneSpec{.structures = 3, .seed = 3},
      SceneSpec{.structures = 1, .kind = ModelKind::kFundamental, .inliers_per_structure = 150,
                .outlier_fraction = 0.7, .seed = 4},
  };
  double slowest = 0;
  int compared = 0;
  for (const auto& spec : specs) {
    auto scene = generate_scene(spec);
    double t = 0;
    const std::string base = fit_json(scene, std::size_t(spec.structures), 1, &t);
    slowest = std::max(slowest, t);
    for (int threads : {1, 2, 8, 0}) {
      std::string again = fit_json(scene, std::size_t(spec.structures), threads, &t);
      slowest = std::max(slowest, t);
      ++compared;
      if (again != base) {
        return {false, fmt::format("scene seed {} differs at {} threads", spec.seed, threads)};
      }
    }
  }
  return {slowest < kMaxSceneSeconds,
          fmt::format("{} reruns byte-identical over {} scenes; slowest run {:.2f} s (limit {} s)",
                      compared, specs.size(), slowest, kMaxSceneSeconds)};
}

Outcome kernel_constants_check() {
  double i1 = integrate([](double x) { return std::pow(0.75 * (1 - x * x), 2); }, -1, 1);
  double i2 = integrate([](double x) { return x * x * 0.75 * (1 - x * x); }, -1, 1);
  const auto& k = kernel_constants();
  double closed = std::pow(243.0 * 0.6 / (35.0 * 0.2), 0.2);
  double oracle = std::pow(243.0 * i1 / (35.0 * i2), 0.2);
  bool ok = std::abs(i1 - 0.6) <= kIntegralTolerance && std::abs(i2 - 0.2) <= kIntegralTolerance &&
            std::abs(k.squared_integral - 0.6) <= kIntegralTolerance &&
            std::abs(k.second_moment - 0.2) <= kIntegralTolerance &&
            std::abs(closed - oracle) <= kBandwidthTolerance &&
            std::abs(bandwidth(1.0, 1) - oracle) <= kBandwidthTolerance &&
            std::abs(closed - 1.8355) <= kBandwidthTolerance;
  return {ok, fmt::format("I1 {:.12f} / {:.12f}, I2 {:.12f} / {:.12f}, bandwidth {:.6f} vs {:.6f}",
                          k.squared_integral, i1, k.second_moment, i2, bandwidth(1.0, 1), oracle)};
}

Outcome homography_scene() {
  double worst = 0, slowest = 0;
  std::string errors;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto scene = generate_scene(SceneSpec{.structures = 2, .inliers_per_structure = 60, .outlier_fraction = 0.5,
                                          .noise_sigma = 1.0, .seed = seed});
    auto start = std::chrono::steady_clock::now();
    auto r = run_pipeline({scene.correspondences, scene.image, {}},
                          PipelineConfig{.structures = 2, .superpixels = 150});
    slowest = std::max(slowest, seconds_since(start));
    worst = std::max(worst, *r.error);
    errors += fmt::format("{}{:.2f}", errors.empty() ? "" : " ", *r.error);
  }
  return {worst <= kHomographyErrorLimit && slowest <= kMaxSceneSeconds,
          fmt::format("errors [{}]%, max {:.2f}% (limit {}%), slowest {:.2f} s", errors, worst,
                      kHomographyErrorLimit, slowest)};
}

Outcome fundamental_robustness() {
  auto scene = generate_scene(SceneSpec{.structures = 1, .kind = ModelKind::kFundamental,
                                        .inliers_per_structure = 150, .outlier_fraction = 0.7, .seed = 1});
  auto gt = ground_truth_labels(scene.correspondences);
  std::vector<double> sdf;
  for (int run = 0; run < 5; ++run) {
    auto r = run_pipeline({scene.correspondences, scene.image, {}},
                          PipelineConfig{.kind = ModelKind::kFundamental, .structures = 1});
    sdf.push_back(*r.error);
  }
  std::vector<double> ransac;
  for (int seed = 0; seed < kRansacSeeds; ++seed) {
    auto models = ransac_baseline(scene.correspondences, ModelKind::kFundamental,
                                  {.structures = 1, .iterations = kRansacIterations,
                                   .inlier_threshold = kRansacThreshold, .seed = std::uint64_t(seed)});
    std::vector<double> t(models.size(), kRansacThreshold);
    ransac.push_back(fitting_error(assign_labels(models, scene.correspondences, t), gt));
  }
  double sdf_std = stdev(sdf), ransac_std = stdev(ransac);
  bool ok = sdf[0] <= kFundamentalErrorLimit && sdf_std == 0.0 && ransac_std > 0.0;
  return {ok, fmt::format("SDF error {:.2f}% (limit {}%), SDF std {:g}, RANSAC mean {:.2f}% std {:.3f}",
                          sdf[0], kFundamentalErrorLimit, sdf_std,
                          std::accumulate(ransac.begin(), ransac.end(), 0.0) / double(ransac.size()), ransac_std)};
}

Outcome contamination_recovery() {
  int recovered = 0, elsewhere = 0;
  std::string shares;
  for (int seed = 1; seed <= kRecoverySeeds; ++seed) {
    auto scene = generate_scene(SceneSpec{.seed = std::uint64_t(seed)});
    const auto& c = scene.correspondences;
    std::vector<std::size_t> a, o;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i].gt_label == 1) a.push_back(i);
      if (c[i].gt_label == 0) o.push_back(i);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(o.begin(), o.end(), rng);
    const std::size_t half = stable_sample_size(ModelKind::kHomography) / 2;
    std::vector<std::size_t> sample(a.begin(), a.begin() + half);
    sample.insert(sample.end(), o.begin(), o.begin() + half);
    auto cfg = MhuConfig::for_data(c.size(), ModelKind::kHomography);
    auto updated = mhu_update(fit_model(ModelKind::kHomography, c, sample), c, cfg);
    auto rr = rank_residuals(updated, c);
    std::size_t hits = 0, other = 0;
    for (std::size_t j = 0; j < cfg.support_size; ++j) {
      hits += c[rr.rank[j]].gt_label == 1;
      other += *c[rr.rank[j]].gt_label > 1;
    }
    double share = double(hits) / double(cfg.support_size);
    recovered += share >= kRecoveryFraction;
    elsewhere += double(other) >= kRecoveryFraction * double(cfg.support_size);
    shares += fmt::format("{}{:.2f}", shares.empty() ? "" : " ", share);
  }
  return {recovered >= kRecoverySeedsRequired,
          fmt::format("{}/{} seeds reach {:.0f}% structure-A share (need {}); shares [{}]; "
                      "{} converged on the other structure instead",
                      recovered, kRecoverySeeds, 100 * kRecoveryFraction, kRecoverySeedsRequired, shares,
                      elsewhere)};
}

Outcome selection_oracle() {
  std::mt19937_64 rng(99);
  int cases = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto scene = generate_scene(SceneSpec{.structures = 1 + int(seed % 3), .inliers_per_structure = 40, .seed = seed});
    const auto& c = scene.correspondences;
    auto map = slic_segment(scene.image, {});
    auto hyps = mhu_update_all(generate_initial_hypotheses(c, map, ModelKind::kHomography), c,
                               MhuConfig::for_data(c.size(), ModelKind::kHomography));
    std::shuffle(hyps.begin(), hyps.end(), rng);
    if (hyps.size() > kMaxOracleHypotheses) hyps.resize(kMaxOracleHypotheses);
    for (std::size_t l = 1; l <= 4; ++l) {
      for (double t : {1.5, 2.5, 4.0}) {
        auto got = select_models(hyps, c, l, t);
        auto want = testing::brute_force_select(hyps, c, l, t);
        ++cases;
        if (got.selected_positions != want.positions || got.inlier_sets != want.inliers ||
            got.model_deficit != want.deficit) {
          return {false, fmt::format("mismatch on scene seed {} with l={} T={}", seed, l, t)};
        }
      }
    }
  }
  return {true, fmt::format("{} selections identical to the brute-force loop", cases)};
}

Outcome error_metric() {
  std::mt19937_64 rng(7);
  int trials = 0;
  for (; trials < 500; ++trials) {
    std::size_t n = 10 + rng() % 200;
    int l = 1 + int(rng() % 4);
    Labeling gt(n);
    for (auto& x : gt) x = int(rng() % (l + 1));
    if (fitting_error(gt, gt) != 0.0) return {false, "identity gave a non-zero error"};
    std::vector<int> perm(l);
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    Labeling relabeled = gt;
    for (auto& x : relabeled)
      if (x) x = perm[x - 1];
    if (fitting_error(relabeled, gt) != 0.0) return {false, "relabeling gave a non-zero error"};
    std::size_t k = rng() % (n + 1);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Labeling planted = relabeled;
    for (std::size_t i = 0; i < k; ++i) planted[idx[i]] = planted[idx[i]] == 0 ? l + 1 : 0;
    if (fitting_error(planted, gt) != 100.0 * double(k) / double(n)) {
      return {false, fmt::format("{} planted mislabels on {} points gave {}", k, n, fitting_error(planted, gt))};
    }
  }
  return {true, fmt::format("{} random labelings: identity 0, relabeling 0, k plants exactly 100k/n", trials)};
}

RgbImage textured(int w, int h, std::uint64_t seed) {
  SceneSpec spec{.width = w, .height = h, .seed = seed};
  return generate_scene(spec).image;
}

Outcome slic_properties() {
  auto img = textured(320, 240, 5);
  auto base = slic_segment(img, {});
  for (std::size_t l = 0; l < base.label_count(); ++l) {
    if (!testing::label_is_connected(base, int(l))) return {false, fmt::format("label {} is disconnected", l)};
  }
  std::vector<int> seen(base.label_count(), 0);
  for (int l : base.labels) {
    if (l < 0 || std::size_t(l) >= base.label_count()) return {false, "pixel without a valid label"};
    seen[l] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 0) != 0) return {false, "empty label"};
  for (int threads : {1, 2, 8}) {
    tbb::task_arena arena(threads);
    SuperpixelMap m;
    arena.execute([&] { m = slic_segment(img, {}); });
    if (m.labels != base.labels) return {false, fmt::format("labels differ at {} threads", threads)};
  }
  if (slic_segment(img, {}).labels != base.labels) return {false, "labels differ between runs"};

  auto big = textured(640, 480, 5);
  std::vector<double> small_t, big_t;
  for (int r = 0; r < kTimingRepeats; ++r) {
    auto s = std::chrono::steady_clock::now();
    slic_segment(img, {});
    small_t.push_back(seconds_since(s));
    s = std::chrono::steady_clock::now();
    slic_segment(big, {});
    big_t.push_back(seconds_since(s));
  }
  double ratio = median(big_t) / median(small_t);
  return {ratio <= kSlicScalingLimit,
          fmt::format("{} labels cover and connect, identical at 1/2/8 threads; 4x pixels took {:.2f}x time (limit {})",
                      base.label_count(), ratio, kSlicScalingLimit)};
}

Outcome combination_bound() {
  std::mt19937_64 rng(2025);
  std::size_t pairs = 0;
  for (int trial = 0; trial < kRandomMaps; ++trial) {
    int w = 30 + int(rng() % 90), h = 30 + int(rng() % 70), k = 3 + int(rng() % 40);
    int requested = std::max(1, k + int(rng() % 21) - 10);
    auto map = superpixels_from_labels(testing::random_voronoi(w, h, k, rng), requested);
    std::uniform_real_distribution<double> ux(0, w - 1), uy(0, h - 1);
    std::vector<Correspondence> c(20 + rng() % 60);
    for (auto& x : c) x = {{ux(rng), uy(rng)}, {0, 0}, 0.5};
    auto got = combine_groups(assign_groups(c, map), map, map.interval);
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < c.size(); ++i) members[locate(map, c[i].p1)].push_back(i);
    auto want = testing::brute_force_combine(members, map.labels, w, h, map.interval);
    if (got.size() != want.size()) return {false, fmt::format("map {}: {} groups vs {}", trial, got.size(), want.size())};
    for (std::size_t i = 0; i < got.size(); ++i) {
      const auto& g = got[i];
      if (g.members != want[i].members || !(g.box == want[i].box) || g.superpixels.front() != want[i].a) {
        return {false, fmt::format("map {}: group {} differs from enumeration", trial, i)};
      }
      if (g.superpixels.size() == 2) {
        ++pairs;
        if (g.box.width() > 2 * map.interval || g.box.height() > 2 * map.interval) {
          return {false, fmt::format("map {}: combined box {}x{} exceeds 2S = {:.2f}", trial, g.box.width(),
                                     g.box.height(), 2 * map.interval)};
        }
      }
    }
  }
  return {true, fmt::format("{} random maps, {} combined pairs, all within 2S x 2S and equal to enumeration",
                            kRandomMaps, pairs)};
}

Outcome stage_costs() {
  // Same correspondences over a 640x480 and a 1280x480 label map. The tiles
  // covering the original area are identical, so both runs sample, update and
  // select the same hypotheses and only the pixel count changes.
  auto scene = generate_scene(SceneSpec{.seed = 1});
  auto base_map = superpixels_from_labels(testing::tiled_grid(640, 480, 40, 40), 192);
  auto wide_map = superpixels_from_labels(testing::tiled_grid(1280, 480, 40, 40), 384);
  PipelineConfig cfg{.structures = 2};
  std::vector<double> base_t, wide_t;
  std::size_t base_m = 0, wide_m = 0;
  for (int r = 0; r < kTimingRepeats; ++r) {
    auto b = run_pipeline({scene.correspondences, {}, base_map}, cfg);
    auto w = run_pipeline({scene.correspondences, {}, wide_map}, cfg);
    base_t.push_back(b.timings.after_segmentation());
    wide_t.push_back(w.timings.after_segmentation());
    base_m = b.initial_hypotheses;
    wide_m = w.initial_hypotheses;
  }
  double ratio = median(wide_t) / median(base_t);
  return {ratio <= kStageScalingLimit && base_m == wide_m,
          fmt::format("non-segmentation time {:.1f} ms -> {:.1f} ms at 2x pixels ({} hypotheses each), "
                      "ratio {:.2f} (limit {})",
                      1e3 * median(base_t), 1e3 * median(wide_t), base_m, ratio, kStageScalingLimit)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  report(1, "determinism", determinism());
  report(2, "kernel constants", kernel_constants_check());
  report(3, "two-homography scene", homography_scene());
  report(4, "fundamental robustness", fundamental_robustness());
  report(5, "contamination recovery", contamination_recovery());
  report(6, "selection oracle", selection_oracle());
  report(7, "fitting error metric", error_metric());
  report(8, "superpixel properties", slic_properties());
  report(9, "combination bound", combination_bound());
  report(10, "stage cost scaling", stage_costs());
  fmt::print("{} of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
