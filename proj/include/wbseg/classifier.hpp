#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "wbseg/features.hpp"
#include "wbseg/volume.hpp"

namespace wbseg {

/// p(class | features) over the four tissue classes.
using ClassPosterior = std::array<double, kNumClasses>;

// First maximum wins.
TissueClass argmax_class(const ClassPosterior& p);

/// Shared contract for every voxel classifier.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t dim() const = 0;
  virtual ClassPosterior posterior(std::span<const float> features) const = 0;

  // Hard decision given the already computed posterior of `features`.
  // Defaults to argmax_class; classifiers with their own tie rule override.
  virtual TissueClass decide(std::span<const float> features, const ClassPosterior& p) const {
    (void)features;
    return argmax_class(p);
  }

  // Row-wise posteriors; `progress` (optional) receives the completed fraction.
  virtual std::vector<ClassPosterior> posterior_batch(
      const FeatureMatrix& x, const std::function<void(double)>& progress = {}) const;
};

}  // namespace wbseg
