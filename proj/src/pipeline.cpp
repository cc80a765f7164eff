#include "wbseg/pipeline.hpp"

#include <chrono>

#include "wbseg/error.hpp"
#include "wbseg/features.hpp"
#include "wbseg/svm.hpp"

namespace wbseg {

using nlohmann::json;

std::string_view to_string(HyperMode mode) {
  switch (mode) {
    case HyperMode::Grid: return "grid";
    case HyperMode::Fixed: return "fixed";
    case HyperMode::Explicit: return "explicit";
  }
  return "?";
}

HyperMode hyper_mode_from_string(std::string_view name) {
  if (name == "grid") return HyperMode::Grid;
  if (name == "fixed") return HyperMode::Fixed;
  if (name == "explicit") return HyperMode::Explicit;
  throw Error(ErrorCode::InvalidArgument, "hyper mode must be grid, fixed or explicit");
}

void PipelineConfig::validate() const {
  crf.validate();
  if (classifier == ClassifierKind::Pksvm && !use_spatial_features) {
    throw Error(ErrorCode::ProductKernelNeedsSpatial,
                "the product kernel needs spatial features (use_spatial_features=true)");
  }
  if (hyper_mode == HyperMode::Grid) {
    grid.validate(classifier);
    if (folds < 2) throw Error(ErrorCode::InvalidArgument, "folds must be >= 2");
  } else if (hyper_mode == HyperMode::Explicit) {
    HyperGrid::single(explicit_values).validate(classifier);
  }
  if (subsample_target < 8) {
    throw Error(ErrorCode::TargetTooSmall, "subsample target_n must be >= 8");
  }
  if (!std::isfinite(mask_threshold)) throw Error(ErrorCode::InvalidArgument, "mask threshold must be finite");
}

json PipelineConfig::to_json() const {
  json hyper = {{"mode", std::string(to_string(hyper_mode))}, {"folds", folds}, {"cv_block", cv_block}, {"seed", hyper_seed}};
  if (hyper_mode == HyperMode::Explicit) hyper["values"] = hyper_to_json(classifier, explicit_values);
  if (hyper_mode == HyperMode::Grid) {
    hyper["grid"] = {{"C", grid.C},          {"gamma", grid.gamma},     {"gamma1", grid.gamma1},
                     {"gamma2", grid.gamma2}, {"k", grid.k},             {"n_trees", grid.n_trees},
                     {"min_leaf", grid.min_leaf}};
  }
  return {{"classifier", std::string(to_string(classifier))},
          {"use_crf", use_crf},
          {"use_spatial_features", use_spatial_features},
          {"hyper", hyper},
          {"subsample", {{"target_n", subsample_target}, {"seed", subsample_seed}}},
          {"train_seed", train_seed},
          {"crf",
           {{"lambda", crf.lambda},
            {"sigma2", crf.sigma2},
            {"connectivity", crf.connectivity},
            {"epsilon", crf.epsilon}}},
          {"mask_threshold", mask_threshold}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  PipelineConfig c;
  try {
    if (j.contains("classifier")) c.classifier = classifier_from_string(j.at("classifier").get<std::string>());
    c.explicit_values = fixed_profile(c.classifier);
    if (j.contains("use_crf")) c.use_crf = j.at("use_crf").get<bool>();
    if (j.contains("use_spatial_features")) c.use_spatial_features = j.at("use_spatial_features").get<bool>();
    if (j.contains("hyper")) {
      const auto& h = j.at("hyper");
      if (h.contains("mode")) c.hyper_mode = hyper_mode_from_string(h.at("mode").get<std::string>());
      if (h.contains("folds")) c.folds = h.at("folds").get<std::size_t>();
      if (h.contains("cv_block")) c.cv_block = h.at("cv_block").get<std::size_t>();
      if (h.contains("seed")) c.hyper_seed = h.at("seed").get<std::uint64_t>();
      if (h.contains("grid")) c.grid = grid_from_json(h.at("grid"));
      if (h.contains("values")) {
        c.explicit_values = hyper_from_json(c.classifier, h.at("values"));
      } else if (c.hyper_mode == HyperMode::Explicit) {
        throw Error(ErrorCode::InvalidArgument, "explicit hyper mode needs 'values'");
      }
    }
    if (j.contains("subsample")) {
      const auto& s = j.at("subsample");
      if (s.contains("target_n")) c.subsample_target = s.at("target_n").get<std::size_t>();
      if (s.contains("seed")) c.subsample_seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("train_seed")) c.train_seed = j.at("train_seed").get<std::uint64_t>();
    if (j.contains("crf")) {
      const auto& r = j.at("crf");
      if (r.contains("lambda")) c.crf.lambda = r.at("lambda").get<double>();
      if (r.contains("sigma2")) c.crf.sigma2 = r.at("sigma2").get<double>();
      if (r.contains("connectivity")) c.crf.connectivity = r.at("connectivity").get<int>();
      if (r.contains("epsilon")) c.crf.epsilon = r.at("epsilon").get<double>();
    }
    if (j.contains("mask_threshold")) c.mask_threshold = j.at("mask_threshold").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string PipelineConfig::method_name() const {
  std::string name(to_string(classifier));
  for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (classifier == ClassifierKind::AdaBoost) name = "AdaBoost";
  if (use_crf) name += "-CRF";
  if (use_spatial_features) name += "*";
  return name;
}

json SegmentationReport::to_json() const {
  json j = {{"dims", {labels.dims().w, labels.dims().h, labels.dims().d}},
            {"classifier", std::string(to_string(classifier))},
            {"hyperparams", hyper_to_json(classifier, chosen)},
            {"timings",
             {{"featurize", timings.featurize},
              {"select", timings.select},
              {"train", timings.train},
              {"predict", timings.predict},
              {"crf", timings.crf},
              {"total", timings.total}}},
            {"feature_store_bytes", feature_store_bytes},
            {"in_mask_voxels", in_mask_voxels},
            {"stroke_count", stroke_count},
            {"training_rows", training_rows}};
  std::array<std::size_t, kNumClasses> counts{};
  for (auto v : labels.data()) ++counts[v];
  j["label_counts"] = counts;
  if (selection) j["selection"] = selection->to_json();
  if (crf_stats) {
    j["crf"] = {{"cycles", crf_stats->cycles},
                {"moves", crf_stats->moves},
                {"accepted", crf_stats->accepted},
                {"initial_energy", crf_stats->initial_energy},
                {"final_energy", crf_stats->final_energy}};
  }
  return j;
}

void check_stroke_coverage(const StrokeSet& strokes, const PipelineConfig& config) {
  const auto counts = strokes.class_counts();
  std::string missing;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0) {
      if (!missing.empty()) missing += ", ";
      missing += class_name(static_cast<TissueClass>(c));
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::StrokesMissingClass, "strokes missing class(es): " + missing);
  }
  if (config.hyper_mode == HyperMode::Grid) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (counts[c] < config.folds) {
        throw Error(ErrorCode::ClassTooSmall,
                    "class " + std::string(class_name(static_cast<TissueClass>(c))) + " has " +
                        std::to_string(counts[c]) + " strokes; grid search needs " +
                        std::to_string(config.folds));
      }
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

SegmentationReport segment_volume(const MultiModalVolume& vol, const StrokeSet& strokes,
                                  const PipelineConfig& config, const ProgressFn& progress) {
  config.validate();
  strokes.check_bounds(vol.dims());
  check_stroke_coverage(strokes, config);
  auto report_progress = [&](std::string_view stage, double f) {
    if (progress) progress(stage, f);
  };

  const auto start = Clock::now();
  SegmentationReport rep;
  rep.classifier = config.classifier;
  rep.stroke_count = strokes.size();

  auto t0 = Clock::now();
  report_progress("featurize", 0.0);
  const BrainMask mask = compute_brain_mask(vol, config.mask_threshold);
  const NormalizedIntensities norm = normalize_modalities(vol, mask);
  const VoxelFeatures vf = featurize(norm, mask, config.use_spatial_features);
  const TrainingSet all = build_training_set(vf, vol.dims(), strokes);
  const TrainingSet ts = subsample_balanced(all, config.subsample_target, config.subsample_seed);
  rep.feature_store_bytes = vf.store_bytes();
  rep.in_mask_voxels = mask.count();
  rep.training_rows = ts.size();
  rep.timings.featurize = seconds_since(t0);
  report_progress("featurize", 1.0);

  t0 = Clock::now();
  report_progress("select", 0.0);
  switch (config.hyper_mode) {
    case HyperMode::Grid:
      rep.selection = grid_search(ts, config.classifier, config.grid, config.folds, config.hyper_seed,
                                  config.cv_block);
      rep.chosen = rep.selection->chosen;
      break;
    case HyperMode::Fixed: rep.chosen = fixed_profile(config.classifier); break;
    case HyperMode::Explicit: rep.chosen = config.explicit_values; break;
  }
  rep.timings.select = seconds_since(t0);
  report_progress("select", 1.0);

  t0 = Clock::now();
  report_progress("train", 0.0);
  const auto model = train_classifier(config.classifier, ts, rep.chosen, config.train_seed);
  rep.timings.train = seconds_since(t0);
  report_progress("train", 1.0);

  t0 = Clock::now();
  const auto posteriors =
      model->posterior_batch(vf.features, [&](double f) { report_progress("predict", f); });
  const std::size_t n = vf.features.rows();
  std::vector<std::uint8_t> node_labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    node_labels[r] = static_cast<std::uint8_t>(model->decide(vf.features.row(r), posteriors[r]));
  }
  rep.timings.predict = seconds_since(t0);
  report_progress("predict", 1.0);

  if (config.use_crf) {
    t0 = Clock::now();
    report_progress("crf", 0.0);
    const CrfProblem problem = build_crf_problem(vf, vol.dims(), posteriors, config.crf);
    ExpansionStats stats;
    node_labels = alpha_expansion(problem, node_labels, &stats);
    rep.crf_stats = std::move(stats);
    rep.timings.crf = seconds_since(t0);
    report_progress("crf", 1.0);
  }

  rep.labels = LabelVolume(vol.dims(), vol.spacing());
  for (std::size_t r = 0; r < n; ++r) {
    rep.labels.set(vf.voxel_of_row[r], static_cast<TissueClass>(node_labels[r]));
  }
  rep.timings.total = seconds_since(start);
  return rep;
}

}  // namespace wbseg
