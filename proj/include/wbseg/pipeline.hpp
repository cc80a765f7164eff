#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "wbseg/crf.hpp"
#include "wbseg/model_selection.hpp"
#include "wbseg/strokes.hpp"
#include "wbseg/volume.hpp"

namespace wbseg {

enum class HyperMode { Grid, Fixed, Explicit };

std::string_view to_string(HyperMode mode);
HyperMode hyper_mode_from_string(std::string_view name);

struct PipelineConfig {
  ClassifierKind classifier = ClassifierKind::Pksvm;
  bool use_crf = true;
  bool use_spatial_features = true;
  HyperMode hyper_mode = HyperMode::Grid;
  HyperGrid grid = HyperGrid::defaults();
  HyperParams explicit_values = fixed_profile(ClassifierKind::Pksvm);
  std::size_t folds = 3;
  std::size_t cv_block = 12;  // spatial CV cube edge in voxels, 0 = plain stratified
  std::uint64_t hyper_seed = 0;
  std::size_t subsample_target = 1000;
  std::uint64_t subsample_seed = 0;
  std::uint64_t train_seed = 0;  // forests only
  CrfParams crf;
  double mask_threshold = 0.0;

  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);

  // Method name in the "KSVM-CRF*" style.
  std::string method_name() const;
};

struct StageTimings {
  double featurize = 0.0;
  double select = 0.0;
  double train = 0.0;
  double predict = 0.0;
  double crf = 0.0;
  double total = 0.0;
};

struct SegmentationReport {
  LabelVolume labels;
  StageTimings timings;
  std::size_t feature_store_bytes = 0;
  std::size_t in_mask_voxels = 0;
  std::size_t stroke_count = 0;
  std::size_t training_rows = 0;
  ClassifierKind classifier = ClassifierKind::Pksvm;
  HyperParams chosen;
  std::optional<SelectionResult> selection;
  std::optional<ExpansionStats> crf_stats;

  // Everything except the label volume.
  nlohmann::json to_json() const;
};

// Reported as (stage name, fraction of that stage done).
using ProgressFn = std::function<void(std::string_view stage, double fraction)>;

// Raises StrokesMissingClass / ClassTooSmall before any heavy work.
void check_stroke_coverage(const StrokeSet& strokes, const PipelineConfig& config);

SegmentationReport segment_volume(const MultiModalVolume& vol, const StrokeSet& strokes,
                                  const PipelineConfig& config, const ProgressFn& progress = {});

}  // namespace wbseg
