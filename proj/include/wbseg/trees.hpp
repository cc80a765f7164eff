#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "wbseg/classifier.hpp"

namespace wbseg {

/// Axis-aligned binary tree; leaves hold the class frequencies of the
/// training rows routed to them. Rows with value <= threshold go left.
class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    float threshold = 0.0f;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::array<std::uint32_t, kNumClasses> counts{};
  };

  // Gini splits over `mtry` sampled features (falling back to the remaining
  // features when none of the sampled ones separates the node). `rows` may
  // contain repeats (bootstrap).
  static DecisionTree fit(const FeatureMatrix& x, std::span<const TissueClass> labels,
                          std::span<const std::size_t> rows, std::size_t mtry,
                          std::size_t min_leaf, std::mt19937_64& rng);

  ClassPosterior posterior(std::span<const float> f) const;
  const Node& leaf_for(std::span<const float> f) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;

 private:
  std::vector<Node> nodes_;
};

ClassPosterior leaf_posterior(const std::array<std::uint32_t, kNumClasses>& counts);

// Convenience overload: all rows once.
DecisionTree fit_tree(const TrainingSet& ts, std::size_t mtry, std::size_t min_leaf,
                      std::mt19937_64& rng);

struct ForestOptions {
  std::size_t n_trees = 100;
  std::size_t mtry = 2;
  std::size_t min_leaf = 1;
};

class RandomForest final : public Classifier {
 public:
  static RandomForest train(const TrainingSet& ts, const ForestOptions& options, std::uint64_t seed);
  static RandomForest from_trees(std::vector<DecisionTree> trees, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  ClassPosterior posterior(std::span<const float> f) const override;
  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t dim_ = 0;
};

struct Stump {
  std::int32_t feature = -1;  // -1: constant prediction
  float threshold = 0.0f;
  TissueClass left = TissueClass::Healthy;
  TissueClass right = TissueClass::Healthy;

  TissueClass predict(std::span<const float> f) const {
    if (feature < 0) return left;
    return f[static_cast<std::size_t>(feature)] <= threshold ? left : right;
  }
};

struct BoostRound {
  Stump stump;
  double weight = 0.0;    // stage weight beta_t
  double error = 0.0;     // weighted training error of the stump
  double train_error = 0.0;  // unweighted ensemble error after this round
};

/// SAMME boosting over decision stumps (K = 4). Posterior is the
/// beta-weighted vote share per class.
class AdaBoostStumps final : public Classifier {
 public:
  static AdaBoostStumps train(const TrainingSet& ts, std::size_t rounds = 100);
  static AdaBoostStumps from_rounds(std::vector<BoostRound> rounds, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  ClassPosterior posterior(std::span<const float> f) const override;
  const std::vector<BoostRound>& rounds() const { return rounds_; }

 private:
  std::vector<BoostRound> rounds_;
  std::size_t dim_ = 0;
};

// Weighted best stump; weights need not be normalised.
Stump fit_stump(const FeatureMatrix& x, std::span<const TissueClass> labels,
                std::span<const double> weights, double* weighted_error = nullptr);

}  // namespace wbseg
