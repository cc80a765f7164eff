#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wbseg/metrics.hpp"
#include "wbseg/phantom.hpp"
#include "wbseg/pipeline.hpp"

namespace wbseg {

/// One evaluated volume: intensities, ground truth and simulated strokes.
struct PhantomCase {
  std::string name;
  MultiModalVolume volume;
  LabelVolume truth;
  StrokeSet strokes;
};

std::vector<PhantomCase> generate_batch(const PhantomSpec& spec, const StrokeBudget& budget,
                                        std::span<const std::uint64_t> seeds);

// Layout per case: <dir>/<name>/{volume.mvol, truth.mvol, strokes.json}.
void save_case(const PhantomCase& c, const std::filesystem::path& dir);
std::vector<PhantomCase> load_batch(const std::filesystem::path& dir);

struct CaseResult {
  MetricsReport metrics;
  SegmentationReport report;
};

CaseResult run_case(const PhantomCase& c, const PipelineConfig& config);

struct SubsampleRow {
  std::size_t n = 0;
  std::array<double, 3> mean_dice{};  // complete, core, enhancing
  double mean_seconds = 0.0;
  double mean_feature_bytes = 0.0;
};

// One pipeline run per (case, n); subsample seeds are seed + case index.
std::vector<SubsampleRow> experiment_subsample_curve(const std::vector<PhantomCase>& cases,
                                                     std::span<const std::size_t> sizes,
                                                     const PipelineConfig& config, std::uint64_t seed);

struct NoiseRow {
  double pct = 0.0;
  std::array<double, 3> mean_dice{};
};

// Hyper-parameters are resolved per case by the config's mode, then
// perturbed with seed + case index for every noise level.
std::vector<NoiseRow> experiment_hyper_noise(const std::vector<PhantomCase>& cases,
                                             std::span<const double> noise_pcts,
                                             const PipelineConfig& config, std::uint64_t seed);

std::string subsample_csv(const std::vector<SubsampleRow>& rows);
std::string noise_csv(const std::vector<NoiseRow>& rows);

}  // namespace wbseg
