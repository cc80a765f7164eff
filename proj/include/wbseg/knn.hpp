#pragma once

#include <optional>

#include "wbseg/classifier.hpp"
#include "wbseg/kdtree.hpp"

namespace wbseg {

/// k-nearest-neighbour voter. Posterior is the vote share of each class among
/// the k nearest training rows (Euclidean, ties to the lower row index).
class KnnClassifier final : public Classifier {
 public:
  static KnnClassifier train(const TrainingSet& ts, std::size_t k = 3, bool use_index = true);

  std::size_t dim() const override { return training_.dim(); }
  std::size_t k() const { return k_; }
  bool indexed() const { return index_.has_value(); }

  ClassPosterior posterior(std::span<const float> f) const override;
  std::vector<ClassPosterior> posterior_batch(
      const FeatureMatrix& x, const std::function<void(double)>& progress = {}) const override;

  // Vote argmax; a vote tie goes to the tied class whose member is nearest.
  TissueClass classify(std::span<const float> f) const;
  TissueClass decide(std::span<const float> f, const ClassPosterior& p) const override;

  std::vector<Neighbor> neighbors(std::span<const float> f) const;

 private:
  KnnClassifier(TrainingSet ts, std::size_t k, bool use_index);
  ClassPosterior vote(const std::vector<Neighbor>& nb) const;

  TrainingSet training_;
  std::size_t k_ = 3;
  std::optional<KdTree> index_;
};

}  // namespace wbseg
