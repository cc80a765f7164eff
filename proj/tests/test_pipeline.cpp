#include "support.hpp"
#include "wbseg/experiments.hpp"
#include "wbseg/pipeline.hpp"

using namespace wbseg;

namespace {

PhantomCase small_case(std::uint64_t seed, std::size_t n = 48) {
  PhantomSpec spec;
  spec.dims = {n, n, n};
  const std::uint64_t seeds[] = {seed};
  return generate_batch(spec, StrokeBudget{}, seeds).front();
}

PipelineConfig fixed_config(ClassifierKind kind, bool crf, bool spatial) {
  PipelineConfig c;
  c.classifier = kind;
  c.use_crf = crf;
  c.use_spatial_features = spatial;
  c.hyper_mode = HyperMode::Fixed;
  return c;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("labels cover the volume and stay healthy outside the mask") {
  const auto c = small_case(1);
  const auto r = segment_volume(c.volume, c.strokes, fixed_config(ClassifierKind::Knn, true, true));
  CHECK(r.labels.dims() == c.volume.dims());
  const auto mask = compute_brain_mask(c.volume);
  for (std::size_t v = 0; v < mask.dims().voxels(); ++v) {
    if (!mask.contains(v)) CHECK(r.labels.at(v) == TissueClass::Healthy);
  }
  CHECK(r.in_mask_voxels == mask.count());
  CHECK(r.feature_store_bytes == mask.count() * 6 * 4);
  CHECK(r.stroke_count == c.strokes.size());
  CHECK(r.crf_stats.has_value());
  CHECK(r.timings.total >= r.timings.crf);
}

TEST_CASE("zero smoothing equals the plain classifier") {
  const auto c = small_case(2);
  auto with = fixed_config(ClassifierKind::Knn, true, true);
  with.crf.lambda = 0.0;
  const auto plain = fixed_config(ClassifierKind::Knn, false, true);
  CHECK(segment_volume(c.volume, c.strokes, with).labels == segment_volume(c.volume, c.strokes, plain).labels);
}

TEST_CASE("smoothing segments a small phantom well") {
  const auto c = small_case(3);
  auto config = fixed_config(ClassifierKind::Pksvm, true, true);
  std::vector<std::string> stages;
  double last = -1.0;
  bool in_range = true;
  const auto r = segment_volume(c.volume, c.strokes, config, [&](std::string_view stage, double f) {
    if (stages.empty() || stages.back() != stage) stages.emplace_back(stage);
    in_range = in_range && f >= 0.0 && f <= 1.0;
    last = f;
  });
  CHECK(in_range);
  CHECK(!stages.empty());
  const auto m = evaluate_segmentation(r.labels, c.truth, compute_brain_mask(c.volume));
  CHECK(m[Region::Complete].dice >= 0.8);
  CHECK(r.chosen == fixed_profile(ClassifierKind::Pksvm));
}

TEST_CASE("grid mode records its selection table") {
  const auto c = small_case(4, 40);
  auto config = fixed_config(ClassifierKind::Knn, false, true);
  config.hyper_mode = HyperMode::Grid;
  const auto r = segment_volume(c.volume, c.strokes, config);
  REQUIRE(r.selection.has_value());
  CHECK(r.selection->table.size() == HyperGrid::defaults().k.size());
  CHECK(r.chosen == r.selection->chosen);
  CHECK(r.to_json().contains("selection"));
}

TEST_CASE("pre-flight failures") {
  const auto c = small_case(5, 32);
  StrokeSet partial;
  for (const auto& s : c.strokes.entries()) {
    if (s.label != TissueClass::Enhancing) partial.add(s);
  }
  CHECK_ERROR_CODE(segment_volume(c.volume, partial, fixed_config(ClassifierKind::Knn, false, true)),
                   ErrorCode::StrokesMissingClass);
  CHECK_ERROR_CODE(fixed_config(ClassifierKind::Pksvm, true, false).validate(), ErrorCode::ProductKernelNeedsSpatial);
  StrokeSet thin;
  std::array<std::size_t, 4> seen{};
  for (const auto& s : c.strokes.entries()) {
    if (seen[class_index(s.label)]++ < 2) thin.add(s);
  }
  auto grid = fixed_config(ClassifierKind::Knn, false, true);
  grid.hyper_mode = HyperMode::Grid;
  CHECK_ERROR_CODE(check_stroke_coverage(thin, grid), ErrorCode::ClassTooSmall);
  CHECK_NOTHROW(check_stroke_coverage(thin, fixed_config(ClassifierKind::Knn, false, true)));
  StrokeSet outside = c.strokes;
  outside.add({{0, 0, 0}, TissueClass::Healthy});
  CHECK_ERROR_CODE(segment_volume(c.volume, outside, fixed_config(ClassifierKind::Knn, false, true)),
                   ErrorCode::StrokeOutsideMask);
}

TEST_CASE("config JSON round-trip and method names") {
  PipelineConfig c;
  c.classifier = ClassifierKind::Ksvm;
  c.hyper_mode = HyperMode::Explicit;
  c.explicit_values.gamma = 7.5;
  c.crf.lambda = 2.0;
  c.subsample_target = 3000;
  const auto back = PipelineConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.explicit_values.gamma == 7.5);
  CHECK(PipelineConfig{}.method_name() == "PKSVM-CRF*");
  CHECK(fixed_config(ClassifierKind::Knn, false, false).method_name() == "KNN");
  CHECK_ERROR_CODE(PipelineConfig::from_json(nlohmann::json{{"hyper", {{"mode", "sometimes"}}}}), ErrorCode::InvalidArgument);
}

TEST_CASE("every classifier runs through the pipeline") {
  const auto c = small_case(6, 32);
  for (auto kind : {ClassifierKind::Knn, ClassifierKind::Lsvm, ClassifierKind::Ksvm, ClassifierKind::Pksvm,
                    ClassifierKind::Rf, ClassifierKind::AdaBoost}) {
    auto config = fixed_config(kind, false, true);
    const auto r = segment_volume(c.volume, c.strokes, config);
    const auto m = evaluate_segmentation(r.labels, c.truth, compute_brain_mask(c.volume));
    MESSAGE(config.method_name() << " complete Dice " << m[Region::Complete].dice);
    CHECK(m[Region::Complete].dice > 0.3);
  }
}

TEST_CASE("batch save and load") {
  PhantomSpec spec;
  spec.dims = {24, 24, 24};
  const std::uint64_t seeds[] = {1, 2};
  const auto batch = generate_batch(spec, StrokeBudget{}, seeds);
  const auto dir = testing::temp_dir("batch");
  for (const auto& c : batch) save_case(c, dir);
  const auto back = load_batch(dir);
  REQUIRE(back.size() == 2);
  CHECK(back[0].volume == batch[0].volume);
  CHECK(back[1].truth == batch[1].truth);
  CHECK(back[1].strokes == batch[1].strokes);
  CHECK_ERROR_CODE(load_batch(dir / "missing"), ErrorCode::IoFailure);
}

TEST_CASE("experiment tables") {
  PhantomSpec spec;
  spec.dims = {32, 32, 32};
  const std::uint64_t seeds[] = {1, 2};
  const auto batch = generate_batch(spec, StrokeBudget{}, seeds);
  auto config = fixed_config(ClassifierKind::Knn, true, true);
  const std::size_t sizes[] = {300, 100};
  const auto rows = experiment_subsample_curve(batch, sizes, config, 0);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n == 300);
  CHECK(rows[1].n == 100);
  CHECK(subsample_csv(rows).find("n,") == 0);

  config.classifier = ClassifierKind::Ksvm;
  const double pcts[] = {0.0, 0.25};
  const auto noise = experiment_hyper_noise(batch, pcts, config, 0);
  REQUIRE(noise.size() == 2);
  CHECK(noise[0].pct == 0.0);
  CHECK(noise[1].pct == 0.25);
  std::array<double, 3> plain{};
  for (const auto& c : batch) {
    const auto r = run_case(c, config);
    for (std::size_t g = 0; g < 3; ++g) plain[g] += r.metrics.regions[g].dice / 2.0;
  }
  for (std::size_t g = 0; g < 3; ++g) CHECK(noise[0].mean_dice[g] == doctest::Approx(plain[g]).epsilon(1e-12));
}

}
