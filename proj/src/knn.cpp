#include "wbseg/knn.hpp"

#include <algorithm>

#include "wbseg/error.hpp"
#include "wbseg/parallel.hpp"

namespace wbseg {

KnnClassifier::KnnClassifier(TrainingSet ts, std::size_t k, bool use_index)
    : training_(std::move(ts)), k_(k) {
  if (use_index) index_.emplace(training_.features);
}

KnnClassifier KnnClassifier::train(const TrainingSet& ts, std::size_t k, bool use_index) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (k > ts.size()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds training size " +
                                          std::to_string(ts.size()));
  }
  return KnnClassifier(ts, k, use_index);
}

std::vector<Neighbor> KnnClassifier::neighbors(std::span<const float> f) const {
  if (index_) return index_->knn(f, k_);
  return brute_force_knn(training_.features, f, k_);
}

ClassPosterior KnnClassifier::vote(const std::vector<Neighbor>& nb) const {
  ClassPosterior p{};
  for (const auto& n : nb) p[class_index(training_.labels[n.index])] += 1.0;
  for (auto& v : p) v /= static_cast<double>(k_);
  return p;
}

ClassPosterior KnnClassifier::posterior(std::span<const float> f) const { return vote(neighbors(f)); }

std::vector<ClassPosterior> KnnClassifier::posterior_batch(
    const FeatureMatrix& x, const std::function<void(double)>& progress) const {
  std::vector<ClassPosterior> out(x.rows());
  constexpr std::size_t kBlock = 65536;
  for (std::size_t start = 0; start < x.rows(); start += kBlock) {
    const std::size_t stop = std::min(x.rows(), start + kBlock);
    parallel_for(stop - start, [&](std::size_t b, std::size_t e) {
      std::vector<Neighbor> nb;
      nb.reserve(k_ + 1);
      for (std::size_t r = start + b; r < start + e; ++r) {
        if (index_) {
          index_->knn(x.row(r), k_, nb);
        } else {
          nb = brute_force_knn(training_.features, x.row(r), k_);
        }
        out[r] = vote(nb);
      }
    }, 1024);
    if (progress) progress(static_cast<double>(stop) / static_cast<double>(x.rows()));
  }
  return out;
}

TissueClass KnnClassifier::classify(std::span<const float> f) const {
  return decide(f, posterior(f));
}

TissueClass KnnClassifier::decide(std::span<const float> f, const ClassPosterior& p) const {
  const double top = *std::max_element(p.begin(), p.end());
  if (std::count(p.begin(), p.end(), top) == 1) return argmax_class(p);
  const auto nb = neighbors(f);
  for (const auto& n : nb) {
    const TissueClass c = training_.labels[n.index];
    if (p[class_index(c)] == top) return c;
  }
  return argmax_class(p);
}

}  // namespace wbseg
