#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wbseg/classifier.hpp"
#include "wbseg/features.hpp"

namespace wbseg {

enum class ClassifierKind { Knn, Lsvm, Ksvm, Pksvm, Rf, AdaBoost };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_from_string(std::string_view name);
bool is_svm(ClassifierKind kind);

/// Union of every classifier's knobs; each kind reads only its own.
struct HyperParams {
  double C = 1.0;
  double gamma = 5.0;
  double gamma1 = 100.0;
  double gamma2 = 10.0;
  std::size_t k = 3;
  std::size_t n_trees = 100;
  std::size_t min_leaf = 1;

  bool operator==(const HyperParams&) const = default;
};

nlohmann::json hyper_to_json(ClassifierKind kind, const HyperParams& hp);
// Missing keys keep the fixed-profile value.
HyperParams hyper_from_json(ClassifierKind kind, const nlohmann::json& j);

struct HyperGrid {
  std::vector<double> C;
  std::vector<double> gamma;
  std::vector<double> gamma1;
  std::vector<double> gamma2;
  std::vector<std::size_t> k;
  std::vector<std::size_t> n_trees;
  std::vector<std::size_t> min_leaf;

  static HyperGrid defaults();
  // Single point taken from `hp`.
  static HyperGrid single(const HyperParams& hp);

  void validate(ClassifierKind kind) const;
  // Candidate points in tie-break order: ascending C, then gamma (gamma1,
  // gamma2), then k, then n_trees, then min_leaf.
  std::vector<HyperParams> points(ClassifierKind kind) const;
};

HyperGrid grid_from_json(const nlohmann::json& j);

HyperParams fixed_profile(ClassifierKind kind);

std::unique_ptr<Classifier> train_classifier(ClassifierKind kind, const TrainingSet& ts,
                                             const HyperParams& hp, std::uint64_t seed = 0);

// Fold id per row; each class is dealt round-robin over the folds after a
// seeded shuffle, so every row is held out exactly once.
std::vector<std::size_t> stratified_folds(std::span<const TissueClass> labels, std::size_t folds,
                                          std::uint64_t seed);

// Spatial variant: a class's rows are grouped by block x block x block cube
// of their source voxel and whole cubes are dealt to folds, largest first.
// Classes with fewer cubes than folds keep their stratified assignment;
// block = 0 is plain stratified_folds.
std::vector<std::size_t> block_folds(std::span<const TissueClass> labels, std::span<const VoxelIndex> sources,
                                     std::size_t folds, std::size_t block, std::uint64_t seed);

// Mean F1 over the classes present in `truth` or `predicted`.
double macro_f1(std::span<const TissueClass> truth, std::span<const TissueClass> predicted);

struct GridScore {
  HyperParams params;
  double score = 0.0;
};

struct SelectionResult {
  ClassifierKind kind = ClassifierKind::Knn;
  HyperParams chosen;
  double chosen_score = 0.0;
  std::vector<GridScore> table;
  std::size_t folds = 3;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Stratified k-fold CV scored by pooled held-out macro-F1. The first point
// (in grid order) with the best score wins.
SelectionResult grid_search(const TrainingSet& ts, ClassifierKind kind, const HyperGrid& grid,
                            std::size_t folds = 3, std::uint64_t seed = 0, std::size_t cv_block = 0);

// Continuous bandwidth/penalty knobs x -> max(x + N(0, (pct x)^2), 1e-3 x).
HyperParams perturb_hyperparams(ClassifierKind kind, const HyperParams& hp, double noise_pct,
                                std::uint64_t seed);

}  // namespace wbseg
