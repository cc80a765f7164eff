#include "wbseg/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "wbseg/error.hpp"
#include "wbseg/knn.hpp"
#include "wbseg/svm.hpp"
#include "wbseg/trees.hpp"

namespace wbseg {

using nlohmann::json;

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Lsvm: return "lsvm";
    case ClassifierKind::Ksvm: return "ksvm";
    case ClassifierKind::Pksvm: return "pksvm";
    case ClassifierKind::Rf: return "rf";
    case ClassifierKind::AdaBoost: return "adaboost";
  }
  return "?";
}

ClassifierKind classifier_from_string(std::string_view name) {
  for (auto k : {ClassifierKind::Knn, ClassifierKind::Lsvm, ClassifierKind::Ksvm,
                 ClassifierKind::Pksvm, ClassifierKind::Rf, ClassifierKind::AdaBoost}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown classifier '" + std::string(name) + "'");
}

bool is_svm(ClassifierKind kind) {
  return kind == ClassifierKind::Lsvm || kind == ClassifierKind::Ksvm || kind == ClassifierKind::Pksvm;
}

json hyper_to_json(ClassifierKind kind, const HyperParams& hp) {
  switch (kind) {
    case ClassifierKind::Knn: return {{"k", hp.k}};
    case ClassifierKind::Lsvm: return {{"C", hp.C}};
    case ClassifierKind::Ksvm: return {{"C", hp.C}, {"gamma", hp.gamma}};
    case ClassifierKind::Pksvm: return {{"C", hp.C}, {"gamma1", hp.gamma1}, {"gamma2", hp.gamma2}};
    case ClassifierKind::Rf: return {{"n_trees", hp.n_trees}, {"min_leaf", hp.min_leaf}};
    case ClassifierKind::AdaBoost: return {{"n_trees", hp.n_trees}};
  }
  return json::object();
}

HyperParams hyper_from_json(ClassifierKind kind, const json& j) {
  HyperParams hp = fixed_profile(kind);
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "hyper-parameter values must be an object");
  try {
    if (j.contains("C")) hp.C = j.at("C").get<double>();
    if (j.contains("gamma")) hp.gamma = j.at("gamma").get<double>();
    if (j.contains("gamma1")) hp.gamma1 = j.at("gamma1").get<double>();
    if (j.contains("gamma2")) hp.gamma2 = j.at("gamma2").get<double>();
    if (j.contains("k")) hp.k = j.at("k").get<std::size_t>();
    if (j.contains("n_trees")) hp.n_trees = j.at("n_trees").get<std::size_t>();
    if (j.contains("min_leaf")) hp.min_leaf = j.at("min_leaf").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad hyper-parameter value: ") + e.what());
  }
  HyperGrid::single(hp).validate(kind);
  return hp;
}

HyperGrid HyperGrid::defaults() {
  HyperGrid g;
  g.C = {0.1, 1, 10, 100};
  g.gamma = {0.5, 1, 5, 10, 50, 100};
  g.gamma1 = {1, 5, 10, 50, 100, 200};
  g.gamma2 = {1, 5, 10, 50, 100};
  g.k = {1, 3, 5, 7};
  g.n_trees = {50, 100};
  g.min_leaf = {1, 3};
  return g;
}

HyperGrid HyperGrid::single(const HyperParams& hp) {
  HyperGrid g;
  g.C = {hp.C};
  g.gamma = {hp.gamma};
  g.gamma1 = {hp.gamma1};
  g.gamma2 = {hp.gamma2};
  g.k = {hp.k};
  g.n_trees = {hp.n_trees};
  g.min_leaf = {hp.min_leaf};
  return g;
}

namespace {

template <typename T>
void require_positive(const std::vector<T>& values, const char* name) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, std::string("grid list '") + name + "' is empty");
  }
  for (const T& v : values) {
    if (!(v > T{0}) || !std::isfinite(static_cast<double>(v))) {
      throw Error(ErrorCode::InvalidArgument, std::string("grid list '") + name + "' needs positive values");
    }
  }
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

void HyperGrid::validate(ClassifierKind kind) const {
  switch (kind) {
    case ClassifierKind::Knn: require_positive(k, "k"); break;
    case ClassifierKind::Lsvm: require_positive(C, "C"); break;
    case ClassifierKind::Ksvm:
      require_positive(C, "C");
      require_positive(gamma, "gamma");
      break;
    case ClassifierKind::Pksvm:
      require_positive(C, "C");
      require_positive(gamma1, "gamma1");
      require_positive(gamma2, "gamma2");
      break;
    case ClassifierKind::Rf:
      require_positive(n_trees, "n_trees");
      require_positive(min_leaf, "min_leaf");
      break;
    case ClassifierKind::AdaBoost: require_positive(n_trees, "n_trees"); break;
  }
}

std::vector<HyperParams> HyperGrid::points(ClassifierKind kind) const {
  validate(kind);
  const HyperParams base = fixed_profile(kind);
  std::vector<HyperParams> out;
  switch (kind) {
    case ClassifierKind::Knn:
      for (auto kk : sorted_unique(k)) {
        HyperParams p = base;
        p.k = kk;
        out.push_back(p);
      }
      break;
    case ClassifierKind::Lsvm:
      for (double c : sorted_unique(C)) {
        HyperParams p = base;
        p.C = c;
        out.push_back(p);
      }
      break;
    case ClassifierKind::Ksvm:
      for (double c : sorted_unique(C)) {
        for (double g : sorted_unique(gamma)) {
          HyperParams p = base;
          p.C = c;
          p.gamma = g;
          out.push_back(p);
        }
      }
      break;
    case ClassifierKind::Pksvm:
      for (double c : sorted_unique(C)) {
        for (double g1 : sorted_unique(gamma1)) {
          for (double g2 : sorted_unique(gamma2)) {
            HyperParams p = base;
            p.C = c;
            p.gamma1 = g1;
            p.gamma2 = g2;
            out.push_back(p);
          }
        }
      }
      break;
    case ClassifierKind::Rf:
      for (auto t : sorted_unique(n_trees)) {
        for (auto m : sorted_unique(min_leaf)) {
          HyperParams p = base;
          p.n_trees = t;
          p.min_leaf = m;
          out.push_back(p);
        }
      }
      break;
    case ClassifierKind::AdaBoost:
      for (auto t : sorted_unique(n_trees)) {
        HyperParams p = base;
        p.n_trees = t;
        out.push_back(p);
      }
      break;
  }
  return out;
}

HyperGrid grid_from_json(const json& j) {
  HyperGrid g = HyperGrid::defaults();
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "grid must be an object");
  try {
    if (j.contains("C")) g.C = j.at("C").get<std::vector<double>>();
    if (j.contains("gamma")) g.gamma = j.at("gamma").get<std::vector<double>>();
    if (j.contains("gamma1")) g.gamma1 = j.at("gamma1").get<std::vector<double>>();
    if (j.contains("gamma2")) g.gamma2 = j.at("gamma2").get<std::vector<double>>();
    if (j.contains("k")) g.k = j.at("k").get<std::vector<std::size_t>>();
    if (j.contains("n_trees")) g.n_trees = j.at("n_trees").get<std::vector<std::size_t>>();
    if (j.contains("min_leaf")) g.min_leaf = j.at("min_leaf").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad grid: ") + e.what());
  }
  return g;
}

HyperParams fixed_profile(ClassifierKind kind) {
  HyperParams hp;
  hp.C = 1.0;
  hp.gamma = 5.0;
  hp.gamma1 = 100.0;
  hp.gamma2 = 10.0;
  hp.k = 3;
  hp.n_trees = 100;
  hp.min_leaf = 1;
  (void)kind;
  return hp;
}

namespace {

KernelSpec kernel_for(ClassifierKind kind, const HyperParams& hp) {
  switch (kind) {
    case ClassifierKind::Lsvm: return KernelSpec::linear();
    case ClassifierKind::Ksvm: return KernelSpec::rbf(hp.gamma);
    case ClassifierKind::Pksvm: return KernelSpec::product(hp.gamma1, hp.gamma2);
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "not a kernel classifier");
}

}  // namespace

std::unique_ptr<Classifier> train_classifier(ClassifierKind kind, const TrainingSet& ts,
                                             const HyperParams& hp, std::uint64_t seed) {
  switch (kind) {
    case ClassifierKind::Knn:
      return std::make_unique<KnnClassifier>(KnnClassifier::train(ts, hp.k));
    case ClassifierKind::Lsvm:
    case ClassifierKind::Ksvm:
    case ClassifierKind::Pksvm:
      return std::make_unique<MulticlassSvm>(MulticlassSvm::train(ts, hp.C, kernel_for(kind, hp)));
    case ClassifierKind::Rf: {
      ForestOptions opts;
      opts.n_trees = hp.n_trees;
      opts.min_leaf = hp.min_leaf;
      return std::make_unique<RandomForest>(RandomForest::train(ts, opts, seed));
    }
    case ClassifierKind::AdaBoost:
      return std::make_unique<AdaBoostStumps>(AdaBoostStumps::train(ts, hp.n_trees));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown classifier kind");
}

std::vector<std::size_t> stratified_folds(std::span<const TissueClass> labels, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least two folds");
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) by_class[class_index(labels[r])].push_back(r);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t next = 0;  // continues across classes to even out fold sizes
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    if (rows.size() < folds) {
      throw Error(ErrorCode::ClassTooSmall,
                  "class " + std::string(class_name(labels[rows.front()])) + " has " +
                      std::to_string(rows.size()) + " strokes, fewer than " +
                      std::to_string(folds) + " folds");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    for (auto r : rows) {
      fold[r] = next % folds;
      ++next;
    }
  }
  return fold;
}

std::vector<std::size_t> block_folds(std::span<const TissueClass> labels, std::span<const VoxelIndex> sources,
                                     std::size_t folds, std::size_t block, std::uint64_t seed) {
  if (block == 0) return stratified_folds(labels, folds, seed);
  if (sources.size() != labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "block folds need one source voxel per row");
  }
  auto fold = stratified_folds(labels, folds, seed);  // also the fallback for classes with few blocks
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::map<std::array<std::size_t, 3>, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (class_index(labels[r]) != c) continue;
      const auto& v = sources[r];
      groups[{v.i / block, v.j / block, v.k / block}].push_back(r);
    }
    if (groups.size() < folds) continue;
    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [key, rows] : groups) order.push_back(&rows);
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->size() > b->size(); });
    // Largest blocks first, each to the currently lightest fold.
    std::vector<std::size_t> load(folds, 0);
    for (std::size_t g = 0; g < order.size(); ++g) {
      const std::size_t f = g < folds ? g : static_cast<std::size_t>(
                                                std::min_element(load.begin(), load.end()) - load.begin());
      load[f] += order[g]->size();
      for (auto r : *order[g]) fold[r] = f;
    }
  }
  return fold;
}

double macro_f1(std::span<const TissueClass> truth, std::span<const TissueClass> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::InvalidArgument, "truth and prediction lengths differ");
  }
  std::array<double, kNumClasses> tp{}, fp{}, fn{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = class_index(truth[i]);
    const auto p = class_index(predicted[i]);
    if (t == p) {
      tp[t] += 1;
    } else {
      fp[p] += 1;
      fn[t] += 1;
    }
  }
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom == 0.0) continue;
    sum += 2 * tp[c] / denom;
    ++classes;
  }
  return classes == 0 ? 0.0 : sum / static_cast<double>(classes);
}

json SelectionResult::to_json() const {
  json table_json = json::array();
  for (const auto& row : table) {
    table_json.push_back({{"params", hyper_to_json(kind, row.params)}, {"score", row.score}});
  }
  return {{"classifier", std::string(to_string(kind))},
          {"chosen", hyper_to_json(kind, chosen)},
          {"score", chosen_score},
          {"folds", folds},
          {"seed", seed},
          {"grid", table_json}};
}

namespace {

std::vector<TissueClass> predict_rows(const Classifier& model, const TrainingSet& ts,
                                      std::span<const std::size_t> rows) {
  const FeatureMatrix x = ts.features.select(rows);
  const auto post = model.posterior_batch(x);
  std::vector<TissueClass> out(rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a) out[a] = model.decide(x.row(a), post[a]);
  return out;
}

}  // namespace

SelectionResult grid_search(const TrainingSet& ts, ClassifierKind kind, const HyperGrid& grid,
                            std::size_t folds, std::uint64_t seed, std::size_t cv_block) {
  const auto points = grid.points(kind);
  const auto fold_of = block_folds(ts.labels, ts.sources, folds, cv_block, seed);
  std::vector<std::vector<std::size_t>> train_rows(folds), test_rows(folds);
  for (std::size_t r = 0; r < ts.size(); ++r) {
    for (std::size_t f = 0; f < folds; ++f) {
      (fold_of[r] == f ? test_rows[f] : train_rows[f]).push_back(r);
    }
  }

  SelectionResult result;
  result.kind = kind;
  result.folds = folds;
  result.seed = seed;
  result.table.resize(points.size());

  // Kernel matrices are shared by every C value and fold of one bandwidth.
  std::map<std::tuple<double, double, double>, std::unique_ptr<GramMatrix>> grams;

  for (std::size_t p = 0; p < points.size(); ++p) {
    const HyperParams& hp = points[p];
    std::vector<TissueClass> pooled_truth, pooled_pred;
    pooled_truth.reserve(ts.size());
    pooled_pred.reserve(ts.size());
    for (std::size_t f = 0; f < folds; ++f) {
      std::unique_ptr<Classifier> model;
      if (is_svm(kind)) {
        const KernelSpec spec = kernel_for(kind, hp);
        spec.validate(ts.dim());
        auto key = std::make_tuple(spec.gamma, spec.gamma1, spec.gamma2);
        auto it = grams.find(key);
        if (it == grams.end()) {
          it = grams.emplace(key, std::make_unique<GramMatrix>(ts.features, spec)).first;
        }
        model = std::make_unique<MulticlassSvm>(
            MulticlassSvm::train_on_rows(ts, *it->second, train_rows[f], hp.C, spec));
      } else {
        model = train_classifier(kind, ts.subset(train_rows[f]), hp, seed + f);
      }
      const auto pred = predict_rows(*model, ts, test_rows[f]);
      for (std::size_t a = 0; a < test_rows[f].size(); ++a) {
        pooled_truth.push_back(ts.labels[test_rows[f][a]]);
        pooled_pred.push_back(pred[a]);
      }
    }
    result.table[p] = {hp, macro_f1(pooled_truth, pooled_pred)};
  }

  std::size_t best = 0;
  for (std::size_t p = 1; p < points.size(); ++p) {
    if (result.table[p].score > result.table[best].score) best = p;
  }
  result.chosen = result.table[best].params;
  result.chosen_score = result.table[best].score;
  return result;
}

HyperParams perturb_hyperparams(ClassifierKind kind, const HyperParams& hp, double noise_pct,
                                std::uint64_t seed) {
  if (!(noise_pct >= 0.0) || !std::isfinite(noise_pct)) {
    throw Error(ErrorCode::InvalidArgument, "noise_pct must be finite and >= 0");
  }
  HyperParams out = hp;
  if (noise_pct == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto jitter = [&](double& x) {
    if (!(x > 0.0)) return;
    x = std::max(x + normal(rng) * noise_pct * x, x * 1e-3);
  };
  switch (kind) {
    case ClassifierKind::Lsvm: jitter(out.C); break;
    case ClassifierKind::Ksvm:
      jitter(out.C);
      jitter(out.gamma);
      break;
    case ClassifierKind::Pksvm:
      jitter(out.C);
      jitter(out.gamma1);
      jitter(out.gamma2);
      break;
    default: break;  // integer knobs are left alone
  }
  return out;
}

}  // namespace wbseg
