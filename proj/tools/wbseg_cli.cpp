// wbseg: command-line front end for phantom generation, segmentation,
// evaluation, grid search, experiments and the session server.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wbseg/error.hpp"
#include "wbseg/experiments.hpp"
#include "wbseg/http_service.hpp"
#include "wbseg/metrics.hpp"
#include "wbseg/phantom.hpp"
#include "wbseg/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wbseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  return PipelineConfig::from_json(read_json(path));
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
  return seeds;
}

HttpService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Within-brain tumour segmentation from sparse strokes"};
  app.require_subcommand(1);

  // phantom gen
  auto* phantom = app.add_subcommand("phantom", "Synthetic phantom tools");
  phantom->require_subcommand(1);
  auto* gen = phantom->add_subcommand("gen", "Generate phantom volume, truth and strokes");
  std::string spec_path, budget_path, out_dir;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  gen->add_option("--spec", spec_path, "Phantom spec JSON (defaults when omitted)");
  gen->add_option("--budget", budget_path, "Stroke budget JSON");
  gen->add_option("--seed", seed, "First seed");
  gen->add_option("--count", count, "Number of phantoms (consecutive seeds)");
  gen->add_option("--out", out_dir, "Output directory")->required();

  // segment
  auto* segment = app.add_subcommand("segment", "Segment a volume from strokes");
  std::string volume_path, strokes_path, config_path, labels_out, report_out;
  segment->add_option("--volume", volume_path)->required();
  segment->add_option("--strokes", strokes_path)->required();
  segment->add_option("--config", config_path, "Pipeline config JSON");
  segment->add_option("--out", labels_out, "Label volume output (MVOL)")->required();
  segment->add_option("--report", report_out, "Report JSON output");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Dice / sensitivity / specificity per region");
  std::string pred_path, truth_path, eval_out, eval_volume, scope_name = "mask";
  double mask_threshold = 0.0;
  evaluate->add_option("--pred", pred_path)->required();
  evaluate->add_option("--truth", truth_path)->required();
  evaluate->add_option("--volume", eval_volume, "Intensity volume defining the brain mask");
  evaluate->add_option("--mask-threshold", mask_threshold);
  evaluate->add_option("--scope", scope_name, "mask or full");
  evaluate->add_option("--out", eval_out, "Metrics JSON output (stdout when omitted)");

  // grid-search
  auto* grid = app.add_subcommand("grid-search", "Per-volume hyper-parameter selection");
  std::string classifier_name = "pksvm", grid_out;
  std::size_t folds = 3;
  bool no_spatial = false;
  grid->add_option("--volume", volume_path)->required();
  grid->add_option("--strokes", strokes_path)->required();
  grid->add_option("--classifier", classifier_name);
  grid->add_option("--config", config_path, "Pipeline config JSON (grid, subsample, seeds)");
  grid->add_option("--folds", folds);
  grid->add_flag("--no-spatial", no_spatial, "Modality features only");
  grid->add_option("--out", grid_out, "Selection JSON output")->required();

  // experiment subsample|hypernoise
  auto* experiment = app.add_subcommand("experiment", "Batch experiments over a phantom directory");
  experiment->require_subcommand(1);
  std::string batch_dir, table_out, sizes_text = "1000,3000", pcts_text = "0,0.05,0.1,0.25,0.5";
  std::uint64_t exp_seed = 0;
  auto* subsample = experiment->add_subcommand("subsample", "Dice and runtime versus training size");
  auto* hypernoise = experiment->add_subcommand("hypernoise", "Dice versus hyper-parameter noise");
  for (auto* sub : {subsample, hypernoise}) {
    sub->add_option("--batch", batch_dir)->required();
    sub->add_option("--config", config_path);
    sub->add_option("--seed", exp_seed);
    sub->add_option("--out", table_out, "CSV output")->required();
  }
  subsample->add_option("--sizes", sizes_text, "Comma-separated training sizes");
  hypernoise->add_option("--pcts", pcts_text, "Comma-separated noise fractions");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP session service");
  int port = 8080;
  std::string host = "127.0.0.1";
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (gen->parsed()) {
      const PhantomSpec spec = spec_path.empty() ? PhantomSpec{} : PhantomSpec::from_json(read_json(spec_path));
      const StrokeBudget budget =
          budget_path.empty() ? StrokeBudget{} : StrokeBudget::from_json(read_json(budget_path));
      const auto seeds = seed_range(seed, count);
      for (const auto& c : generate_batch(spec, budget, seeds)) {
        save_case(c, out_dir);
        std::cout << (fs::path(out_dir) / c.name).string() << " strokes=" << c.strokes.size() << "\n";
      }
    } else if (segment->parsed()) {
      const PipelineConfig config = load_config(config_path);
      const MultiModalVolume vol = load_volume(volume_path);
      const StrokeSet strokes = load_strokes(strokes_path);
      const SegmentationReport rep = segment_volume(vol, strokes, config);
      save_labels(rep.labels, labels_out);
      if (!report_out.empty()) write_json(report_out, rep.to_json());
      std::cout << config.method_name() << " done in " << rep.timings.total << " s\n";
    } else if (evaluate->parsed()) {
      const LabelVolume pred = load_labels(pred_path);
      const LabelVolume truth = load_labels(truth_path);
      MetricsScope scope = scope_from_string(scope_name);
      BrainMask mask = BrainMask::full(pred.dims());
      if (!eval_volume.empty()) {
        mask = compute_brain_mask(load_volume(eval_volume), mask_threshold);
      } else {
        scope = MetricsScope::Full;
      }
      const json out = evaluate_segmentation(pred, truth, mask, scope).to_json();
      if (eval_out.empty()) std::cout << out.dump(2) << "\n";
      else write_json(eval_out, out);
    } else if (grid->parsed()) {
      PipelineConfig config = load_config(config_path);
      config.classifier = classifier_from_string(classifier_name);
      config.use_spatial_features = !no_spatial;
      config.folds = folds;
      config.validate();
      const MultiModalVolume vol = load_volume(volume_path);
      const StrokeSet strokes = load_strokes(strokes_path);
      check_stroke_coverage(strokes, config);
      const BrainMask mask = compute_brain_mask(vol, config.mask_threshold);
      const VoxelFeatures vf = featurize(normalize_modalities(vol, mask), mask, config.use_spatial_features);
      const TrainingSet ts = subsample_balanced(build_training_set(vf, vol.dims(), strokes),
                                                config.subsample_target, config.subsample_seed);
      const SelectionResult sel = grid_search(ts, config.classifier, config.grid, folds, config.hyper_seed,
                                                config.cv_block);
      write_json(grid_out, sel.to_json());
      std::cout << hyper_to_json(sel.kind, sel.chosen).dump() << " score=" << sel.chosen_score << "\n";
    } else if (subsample->parsed()) {
      const PipelineConfig config = load_config(config_path);
      std::vector<std::size_t> sizes;
      for (const auto& t : CLI::detail::split(sizes_text, ',')) sizes.push_back(std::stoul(t));
      const auto cases = load_batch(batch_dir);
      write_file(table_out, subsample_csv(experiment_subsample_curve(cases, sizes, config, exp_seed)));
    } else if (hypernoise->parsed()) {
      const PipelineConfig config = load_config(config_path);
      std::vector<double> pcts;
      for (const auto& t : CLI::detail::split(pcts_text, ',')) pcts.push_back(std::stod(t));
      const auto cases = load_batch(batch_dir);
      write_file(table_out, noise_csv(experiment_hyper_noise(cases, pcts, config, exp_seed)));
    } else if (serve->parsed()) {
      SessionManager sessions;
      HttpService service(sessions);
      if (!service.bind(host, port)) {
        throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
      }
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << host << ":" << service.port() << std::endl;
      service.serve();
      g_service = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return is_io_error(e.code()) ? kExitIo : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
