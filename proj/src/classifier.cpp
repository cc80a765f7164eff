#include "wbseg/classifier.hpp"

#include "wbseg/parallel.hpp"

namespace wbseg {

TissueClass argmax_class(const ClassPosterior& p) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (p[c] > p[best]) best = c;
  }
  return static_cast<TissueClass>(best);
}

std::vector<ClassPosterior> Classifier::posterior_batch(
    const FeatureMatrix& x, const std::function<void(double)>& progress) const {
  std::vector<ClassPosterior> out(x.rows());
  constexpr std::size_t kBlock = 16384;
  for (std::size_t start = 0; start < x.rows(); start += kBlock) {
    const std::size_t stop = std::min(x.rows(), start + kBlock);
    parallel_for(stop - start, [&](std::size_t b, std::size_t e) {
      for (std::size_t r = start + b; r < start + e; ++r) out[r] = posterior(x.row(r));
    }, 256);
    if (progress) progress(static_cast<double>(stop) / static_cast<double>(x.rows()));
  }
  return out;
}

}  // namespace wbseg
