#include "wbseg/experiments.hpp"

#include <algorithm>
#include <sstream>

#include "wbseg/error.hpp"

namespace wbseg {

namespace fs = std::filesystem;

std::vector<PhantomCase> generate_batch(const PhantomSpec& spec, const StrokeBudget& budget,
                                        std::span<const std::uint64_t> seeds) {
  std::vector<PhantomCase> out;
  out.reserve(seeds.size());
  for (auto seed : seeds) {
    Phantom p = generate_phantom(spec, seed);
    PhantomCase c;
    c.name = "phantom_" + std::to_string(seed);
    c.strokes = generate_strokes(p.truth, p.brain, budget, seed);
    c.volume = std::move(p.volume);
    c.truth = std::move(p.truth);
    out.push_back(std::move(c));
  }
  return out;
}

void save_case(const PhantomCase& c, const fs::path& dir) {
  const fs::path d = dir / c.name;
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + d.string() + ": " + ec.message());
  save_volume(c.volume, d / "volume.mvol");
  save_labels(c.truth, d / "truth.mvol");
  save_strokes(c.strokes, d / "strokes.json");
}

std::vector<PhantomCase> load_batch(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::IoFailure, "batch directory not found: " + dir.string());
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "volume.mvol")) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw Error(ErrorCode::IoFailure, "no cases under " + dir.string());
  std::vector<PhantomCase> out;
  for (const auto& d : subdirs) {
    PhantomCase c;
    c.name = d.filename().string();
    c.volume = load_volume(d / "volume.mvol");
    c.truth = load_labels(d / "truth.mvol");
    c.strokes = load_strokes(d / "strokes.json");
    if (c.truth.dims() != c.volume.dims()) {
      throw Error(ErrorCode::DimsMismatch, "truth and volume dims differ in " + c.name);
    }
    out.push_back(std::move(c));
  }
  return out;
}

CaseResult run_case(const PhantomCase& c, const PipelineConfig& config) {
  CaseResult r;
  r.report = segment_volume(c.volume, c.strokes, config);
  const BrainMask mask = compute_brain_mask(c.volume, config.mask_threshold);
  r.metrics = evaluate_segmentation(r.report.labels, c.truth, mask);
  return r;
}

namespace {

std::array<double, 3> dice_of(const MetricsReport& m) {
  return {m[Region::Complete].dice, m[Region::Core].dice, m[Region::Enhancing].dice};
}

}  // namespace

std::vector<SubsampleRow> experiment_subsample_curve(const std::vector<PhantomCase>& cases,
                                                     std::span<const std::size_t> sizes,
                                                     const PipelineConfig& config, std::uint64_t seed) {
  if (cases.empty()) throw Error(ErrorCode::InvalidArgument, "empty phantom batch");
  std::vector<SubsampleRow> rows;
  for (std::size_t n : sizes) {
    SubsampleRow row;
    row.n = n;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      PipelineConfig cfg = config;
      cfg.subsample_target = n;
      cfg.subsample_seed = seed + i;
      const CaseResult r = run_case(cases[i], cfg);
      const auto d = dice_of(r.metrics);
      for (std::size_t k = 0; k < 3; ++k) row.mean_dice[k] += d[k];
      row.mean_seconds += r.report.timings.total;
      row.mean_feature_bytes += static_cast<double>(r.report.feature_store_bytes);
    }
    const double count = static_cast<double>(cases.size());
    for (auto& d : row.mean_dice) d /= count;
    row.mean_seconds /= count;
    row.mean_feature_bytes /= count;
    rows.push_back(row);
  }
  return rows;
}

std::vector<NoiseRow> experiment_hyper_noise(const std::vector<PhantomCase>& cases,
                                             std::span<const double> noise_pcts,
                                             const PipelineConfig& config, std::uint64_t seed) {
  if (cases.empty()) throw Error(ErrorCode::InvalidArgument, "empty phantom batch");
  for (double p : noise_pcts) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise percentages must be >= 0");
  }
  std::vector<NoiseRow> rows(noise_pcts.size());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r].pct = noise_pcts[r];

  for (std::size_t i = 0; i < cases.size(); ++i) {
    const CaseResult base = run_case(cases[i], config);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::array<double, 3> d{};
      if (noise_pcts[r] == 0.0) {
        d = dice_of(base.metrics);
      } else {
        PipelineConfig cfg = config;
        cfg.hyper_mode = HyperMode::Explicit;
        cfg.explicit_values =
            perturb_hyperparams(config.classifier, base.report.chosen, noise_pcts[r], seed + i);
        d = dice_of(run_case(cases[i], cfg).metrics);
      }
      for (std::size_t k = 0; k < 3; ++k) rows[r].mean_dice[k] += d[k];
    }
  }
  for (auto& row : rows) {
    for (auto& d : row.mean_dice) d /= static_cast<double>(cases.size());
  }
  return rows;
}

std::string subsample_csv(const std::vector<SubsampleRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "n,dice_complete,dice_core,dice_enhancing,seconds,feature_store_bytes\n";
  for (const auto& r : rows) {
    os << r.n << ',' << r.mean_dice[0] << ',' << r.mean_dice[1] << ',' << r.mean_dice[2] << ','
       << r.mean_seconds << ',' << r.mean_feature_bytes << '\n';
  }
  return os.str();
}

std::string noise_csv(const std::vector<NoiseRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "noise_pct,dice_complete,dice_core,dice_enhancing\n";
  for (const auto& r : rows) {
    os << r.pct << ',' << r.mean_dice[0] << ',' << r.mean_dice[1] << ',' << r.mean_dice[2] << '\n';
  }
  return os.str();
}

}  // namespace wbseg
