// Acceptance runner: one PASS/FAIL line per headline criterion. Tolerances
// are fixed here; nothing is tuned per run.

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <thread>

#include "oracles.hpp"
#include "wbseg/experiments.hpp"
#include "wbseg/knn.hpp"
#include "wbseg/metrics.hpp"

using namespace wbseg;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

FeatureMatrix random_points(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  FeatureMatrix x(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (float& v : x.row(r)) v = u(rng);
  }
  return x;
}

// ---- oracle criteria -------------------------------------------------------

void graphcut() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(849);
  std::size_t exact = 0, bounded = 0, monotone = 0;
  for (int n = 0; n < 40; ++n) {
    const auto p2 = oracle::random_grid_problem(rng, 2);
    const double e2 = energy(p2, alpha_expansion(p2, unary_argmin(p2)));
    exact += e2 == oracle::min_energy_enumerated(p2);

    const auto p4 = oracle::random_grid_problem(rng, 4);
    const auto init = unary_argmin(p4);
    ExpansionStats stats;
    const double e4 = energy(p4, alpha_expansion(p4, init, &stats));
    bounded += e4 <= 2.0 * oracle::min_energy_enumerated(p4);
    bool mono = e4 <= energy(p4, init);
    double prev = stats.initial_energy;
    for (double t : stats.trace) {
      mono = mono && t <= prev;
      prev = t;
    }
    monotone += mono;
  }
  const double secs = seconds_since(t0);
  report(exact == 40 && bounded == 40 && monotone == 40 && secs < 10.0, "oracle/graphcut",
         fmt("2-label exact %zu/40, 4-label <=2x opt %zu/40, monotone %zu/40, %.2f s (< 10)", exact, bounded,
             monotone, secs));
}

void maxflow() {
  const auto t0 = Clock::now();
  FlowNetwork diamond;
  diamond.node_count = 4;
  diamond.source = 0;
  diamond.sink = 3;
  diamond.edges = {{0, 1, 3}, {0, 2, 2}, {1, 3, 2}, {2, 3, 3}, {1, 2, 1}};
  const double d = max_flow(diamond).value;
  std::mt19937_64 rng(850);
  std::size_t agree = 0;
  for (int n = 0; n < 40; ++n) {
    const auto net = oracle::random_network(rng);
    agree += std::fabs(max_flow(net).value - oracle::min_cut_enumerated(net)) <= 1e-9;
  }
  const double secs = seconds_since(t0);
  report(agree == 40 && d == 5.0 && secs < 1.0, "oracle/max-flow",
         fmt("min-cut agreement %zu/40, diamond %.3f (= 5), %.3f s (< 1)", agree, d, secs));
}

void smo() {
  const auto t0 = Clock::now();
  std::size_t dual_ok = 0, kkt_ok = 0;
  double worst_gap = 0.0, worst_kkt = 0.0;
  std::uniform_real_distribution<double> cdist(0.5, 5.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(851 + seed);
    const auto x = random_points(10, 2, rng);
    std::vector<int> y(10);
    for (std::size_t r = 0; r < 10; ++r) y[r] = (x.row(r)[0] + 0.3 * x.row(r)[1] > 0.65) ? 1 : -1;
    y[0] = 1;
    y[1] = -1;
    const double C = cdist(rng);
    const GramMatrix gram(x, KernelSpec::rbf(2.0));
    std::vector<std::size_t> rows(10);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto sol = smo_solve(gram, rows, y, C);
    const auto qp = oracle::solve_dual_qp(gram, y, C);
    const double gap = std::fabs(sol.dual_objective - qp.objective);
    worst_gap = std::max(worst_gap, gap);
    worst_kkt = std::max(worst_kkt, sol.max_violation);
    dual_ok += gap <= 1e-4;
    kkt_ok += sol.max_violation <= 1e-3;
  }
  const FeatureMatrix two(1, {0.0f, 1.0f});
  const std::vector<int> ty{-1, 1};
  const auto model = smo_train_binary(two, ty, 10.0, KernelSpec::linear());
  double line_err = 0.0;
  for (float v : {0.0f, 0.5f, 1.0f, 2.0f}) {
    const float f[] = {v};
    line_err = std::max(line_err, std::fabs(svm_decision(model, f) - (2.0 * v - 1.0)));
  }
  const double secs = seconds_since(t0);
  report(dual_ok == 30 && kkt_ok == 30 && line_err <= 1e-3 && secs < 30.0, "oracle/SMO",
         fmt("dual within 1e-4 %zu/30 (worst %.2e), KKT <= 1e-3 %zu/30 (worst %.2e), |f-(2x-1)| %.2e, %.2f s", dual_ok,
             worst_gap, kkt_ok, worst_kkt, line_err, secs));
}

void knn() {
  std::mt19937_64 rng(852);
  TrainingSet ts;
  ts.features = random_points(1000, 6, rng);
  for (std::size_t r = 0; r < 1000; ++r) ts.labels.push_back(static_cast<TissueClass>(rng() % 4));
  const auto indexed = KnnClassifier::train(ts, 3, true);
  const auto queries = random_points(200, 6, rng);
  std::size_t equal = 0;
  for (std::size_t q = 0; q < 200; ++q) {
    const auto nb = brute_force_knn(ts.features, queries.row(q), 3);
    ClassPosterior p{};
    for (const auto& n : nb) p[class_index(ts.labels[n.index])] += 1.0 / 3.0;
    equal += indexed.posterior(queries.row(q)) == p && indexed.neighbors(queries.row(q)) == nb;
  }
  report(equal == 200, "oracle/kNN", fmt("indexed == brute force on %zu/200 queries", equal));
}

void kernels() {
  std::mt19937_64 rng(853);
  const auto a = random_points(1000, 6, rng);
  const auto b = random_points(1000, 6, rng);
  std::uniform_real_distribution<double> lg(-2.0, 2.0);
  double worst = 0.0;
  for (std::size_t r = 0; r < 1000; ++r) {
    const double g = std::pow(10.0, lg(rng));
    worst = std::max(worst, std::fabs(kernel_eval(KernelSpec::product(g, g), a.row(r), b.row(r)) -
                                      kernel_eval(KernelSpec::rbf(g), a.row(r), b.row(r))));
  }
  double min_eig = 1e300;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 r2(seed);
    const auto x = random_points(20, 6, r2);
    for (const auto& k : {KernelSpec::linear(), KernelSpec::rbf(5.0), KernelSpec::product(100.0, 10.0)}) {
      const GramMatrix g(x, k);
      Eigen::MatrixXd m(20, 20);
      for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = 0; j < 20; ++j) m(i, j) = g(i, j);
      }
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
                                      .eigenvalues()
                                      .minCoeff());
    }
  }
  report(worst <= 1e-12 && min_eig >= -1e-9, "kernel identities",
         fmt("max |product - rbf| %.2e (<= 1e-12), min Gram eigenvalue %.2e (>= -1e-9)", worst, min_eig));
}

void metric_identities() {
  std::mt19937_64 rng(859);
  std::bernoulli_distribution bit(0.3);
  std::size_t sym = 0, harmonic = 0;
  for (int n = 0; n < 100; ++n) {
    std::vector<std::uint8_t> p(500), t(500);
    for (std::size_t i = 0; i < 500; ++i) {
      p[i] = bit(rng);
      t[i] = bit(rng);
    }
    const auto pt = compute_metrics(p, t), tp = compute_metrics(t, p);
    sym += pt.dice == tp.dice;
    const double h = 2.0 / (1.0 / pt.sensitivity + 1.0 / tp.sensitivity);
    harmonic += std::fabs(pt.dice - h) <= 1e-12;
  }
  std::vector<std::uint8_t> a(50, 0), b(50, 0);
  for (int i = 0; i < 10; ++i) a[i] = 1;
  for (int i = 20; i < 25; ++i) b[i] = 1;
  const auto same = compute_metrics(a, a), apart = compute_metrics(a, b);
  const bool edge = same.dice == 1.0 && same.sensitivity == 1.0 && same.specificity == 1.0 && apart.dice == 0.0 &&
                    apart.sensitivity == 0.0;
  report(sym == 100 && harmonic == 100 && edge, "metric identities",
         fmt("symmetric %zu/100, harmonic mean %zu/100, perfect/disjoint %s", sym, harmonic, edge ? "ok" : "wrong"));
}

// ---- phantom criteria ------------------------------------------------------

struct Method {
  const char* name;
  ClassifierKind kind;
  bool crf;
  bool spatial;
};

struct SuiteScores {
  std::array<double, 3> dice{};  // complete, core, enhancing
  double seconds = 0.0;
  double region_mean() const { return (dice[0] + dice[1] + dice[2]) / 3.0; }
};

PipelineConfig config_for(const Method& m, HyperMode mode = HyperMode::Grid) {
  PipelineConfig c;
  c.classifier = m.kind;
  c.use_crf = m.crf;
  c.use_spatial_features = m.spatial;
  c.hyper_mode = mode;
  c.explicit_values = fixed_profile(m.kind);
  return c;
}

SuiteScores run_suite(const std::vector<PhantomCase>& cases, const PipelineConfig& config,
                      std::vector<CaseResult>* keep = nullptr) {
  SuiteScores s;
  for (const auto& c : cases) {
    auto r = run_case(c, config);
    for (std::size_t g = 0; g < 3; ++g) s.dice[g] += r.metrics.regions[g].dice / static_cast<double>(cases.size());
    s.seconds += r.report.timings.total / static_cast<double>(cases.size());
    if (keep) keep->push_back(std::move(r));
  }
  return s;
}

std::vector<std::uint64_t> seeds_1_to_10() {
  std::vector<std::uint64_t> s(10);
  std::iota(s.begin(), s.end(), std::uint64_t{1});
  return s;
}

void phantom_suite() {
  const auto seeds = seeds_1_to_10();
  const auto cases = generate_batch(PhantomSpec{}, StrokeBudget{}, seeds);

  const Method methods[] = {
      {"kNN", ClassifierKind::Knn, false, false},        {"kNN*", ClassifierKind::Knn, false, true},
      {"kNN-CRF*", ClassifierKind::Knn, true, true},     {"KSVM", ClassifierKind::Ksvm, false, false},
      {"KSVM*", ClassifierKind::Ksvm, false, true},      {"KSVM-CRF*", ClassifierKind::Ksvm, true, true},
      {"PKSVM-CRF*", ClassifierKind::Pksvm, true, true},
  };
  std::map<std::string, SuiteScores> score;
  std::vector<CaseResult> pksvm_runs;
  std::printf("# reference suite: seeds 1-10, 96^3, noise 2%%, default stroke budget, grid mode\n");
  for (const auto& m : methods) {
    const bool is_pk = std::string(m.name) == "PKSVM-CRF*";
    score[m.name] = run_suite(cases, config_for(m), is_pk ? &pksvm_runs : nullptr);
    const auto& s = score[m.name];
    std::printf("#   %-11s Dice complete %.3f core %.3f enhancing %.3f  (%.1f s/volume)\n", m.name, s.dice[0],
                s.dice[1], s.dice[2], s.seconds);
  }

  const auto& pk = score["PKSVM-CRF*"];
  const double ks_crf = score["KSVM-CRF*"].dice[0], ks = score["KSVM"].dice[0];
  const bool thresholds = pk.dice[0] >= 0.85 && pk.dice[1] >= 0.75 && pk.dice[2] >= 0.70;
  const bool order = pk.dice[0] >= ks_crf - 0.01 && ks_crf >= ks - 0.01;
  report(thresholds && order, "phantom end-to-end",
         fmt("PKSVM-CRF* %.3f/%.3f/%.3f (>= .85/.75/.70); complete PKSVM-CRF* %.3f >= KSVM-CRF* %.3f >= KSVM %.3f "
             "(tol 0.01)",
             pk.dice[0], pk.dice[1], pk.dice[2], pk.dice[0], ks_crf, ks));

  const double knn_gain = score["kNN*"].dice[0] - score["kNN"].dice[0];
  const double ksvm_gain = score["KSVM*"].dice[0] - score["KSVM"].dice[0];
  const double crf_gain = score["kNN-CRF*"].dice[0] - score["kNN*"].dice[0];
  report(knn_gain >= 0.02 && ksvm_gain >= 0.02 && crf_gain >= 0.01, "ablation directions",
         fmt("spatial gain kNN %+.3f, KSVM %+.3f (>= 0.02); CRF gain on kNN* %+.3f (>= 0.01)", knn_gain, ksvm_gain,
             crf_gain));

  // Hyper-parameter noise: perturb each volume's selected PKSVM-CRF* values
  // by 25% and rerun with them, as the noise experiment driver does.
  SuiteScores noisy;
  const PipelineConfig pk_config = config_for(methods[6]);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    PipelineConfig cfg = pk_config;
    cfg.hyper_mode = HyperMode::Explicit;
    cfg.explicit_values = perturb_hyperparams(cfg.classifier, pksvm_runs[i].report.chosen, 0.25, 856 + i);
    const auto r = run_case(cases[i], cfg);
    for (std::size_t g = 0; g < 3; ++g) noisy.dice[g] += r.metrics.regions[g].dice / static_cast<double>(cases.size());
  }
  const double noise_drop = pk.region_mean() - noisy.region_mean();

  // Fixed profile against per-volume grid search on randomised tables.
  PhantomSpec jittered;
  jittered.table_jitter = 0.2;
  const auto jcases = generate_batch(jittered, StrokeBudget{}, seeds);
  const auto grid = run_suite(jcases, pk_config);
  const auto fixed = run_suite(jcases, config_for(methods[6], HyperMode::Fixed));
  std::printf("# randomised tables (jitter 0.2): grid %.3f/%.3f/%.3f, fixed %.3f/%.3f/%.3f\n", grid.dice[0],
              grid.dice[1], grid.dice[2], fixed.dice[0], fixed.dice[1], fixed.dice[2]);
  std::printf("# 25%% noise: %.3f/%.3f/%.3f against %.3f/%.3f/%.3f\n", noisy.dice[0], noisy.dice[1], noisy.dice[2],
              pk.dice[0], pk.dice[1], pk.dice[2]);
  report(fixed.region_mean() <= grid.region_mean() && noise_drop <= 0.05, "hyper-parameter experiments",
         fmt("mean Dice fixed %.3f <= grid %.3f; 25%% noise drop %.3f (<= 0.05)", fixed.region_mean(),
             grid.region_mean(), noise_drop));
}

void speedup() {
  // A denser stroke budget so that both sizes actually subsample.
  StrokeBudget dense;
  dense.slices_per_class = 6;
  const auto cases = generate_batch(PhantomSpec{}, dense, seeds_1_to_10());
  std::size_t min_strokes = SIZE_MAX;
  for (const auto& c : cases) min_strokes = std::min(min_strokes, c.strokes.size());
  PipelineConfig config = config_for({"kNN-CRF*", ClassifierKind::Knn, true, true});
  const std::size_t sizes[] = {3000, 1000};
  const auto rows = experiment_subsample_curve(cases, sizes, config, 857);
  auto mean = [](const SubsampleRow& r) { return (r.mean_dice[0] + r.mean_dice[1] + r.mean_dice[2]) / 3.0; };
  const double diff = std::fabs(mean(rows[1]) - mean(rows[0]));
  report(diff <= 0.03 && rows[1].mean_seconds < rows[0].mean_seconds, "speed-up curve",
         fmt("kNN-CRF* mean Dice n=3000 %.3f, n=1000 %.3f (|diff| %.3f <= 0.03); %.2f s -> %.2f s (min strokes %zu)",
             mean(rows[0]), mean(rows[1]), diff, rows[0].mean_seconds, rows[1].mean_seconds, min_strokes));
}

void performance() {
  PhantomSpec spec;
  spec.dims = {160, 160, 160};
  const std::uint64_t seed[] = {858};
  const auto cases = generate_batch(spec, StrokeBudget{}, seed);
  PipelineConfig config = config_for({"kNN-CRF*", ClassifierKind::Knn, true, true});
  config.subsample_target = 1000;
  const auto t0 = Clock::now();
  const auto r = run_case(cases[0], config);
  const double secs = seconds_since(t0);
  const std::size_t in_mask = compute_brain_mask(cases[0].volume).count();
  const bool bytes = r.report.feature_store_bytes == in_mask * 6 * 4;
  report(secs <= 30.0 && bytes && r.report.training_rows <= 1000, "performance budget",
         fmt("160^3 kNN-CRF* %.1f s on %u thread(s) (<= 30), %zu training rows, store %zu B %s in-mask %zu x 6 x 4",
             secs, std::thread::hardware_concurrency(), r.report.training_rows, r.report.feature_store_bytes,
             bytes ? "==" : "!=", in_mask));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  graphcut();
  maxflow();
  smo();
  knn();
  kernels();
  phantom_suite();
  speedup();
  performance();
  metric_identities();
  std::printf("# %d criterion(s) failed, %.0f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
