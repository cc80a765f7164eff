#include <cmath>
#include <numeric>

#include "wbseg/error.hpp"
#include "wbseg/parallel.hpp"
#include "wbseg/svm.hpp"

namespace wbseg {

MulticlassSvm MulticlassSvm::train(const TrainingSet& ts, double C, const KernelSpec& kernel,
                                   const SmoOptions& options) {
  kernel.validate(ts.dim());
  const GramMatrix gram(ts.features, kernel);
  std::vector<std::size_t> rows(ts.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return train_on_rows(ts, gram, rows, C, kernel, options);
}

MulticlassSvm MulticlassSvm::train_on_rows(const TrainingSet& ts, const GramMatrix& gram,
                                           std::span<const std::size_t> rows, double C,
                                           const KernelSpec& kernel, const SmoOptions& options) {
  kernel.validate(ts.dim());
  if (gram.size() != ts.size()) {
    throw Error(ErrorCode::InvalidArgument, "Gram matrix does not cover the training set");
  }
  std::array<std::size_t, kNumClasses> counts{};
  for (auto r : rows) ++counts[class_index(ts.labels[r])];
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0 || counts[c] == rows.size()) {
      throw Error(ErrorCode::SingleClassInput,
                  "one-vs-rest SVM needs every class present; missing " +
                      std::string(class_name(static_cast<TissueClass>(c))));
    }
  }

  MulticlassSvm m;
  m.kernel_ = kernel;
  m.C_ = C;
  m.dim_ = ts.dim();

  const std::size_t n = rows.size();
  std::vector<std::array<double, kNumClasses>> coef(n);
  std::vector<int> y(n);
  std::vector<double> decision(n);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t a = 0; a < n; ++a) {
      y[a] = class_index(ts.labels[rows[a]]) == c ? 1 : -1;
    }
    const SmoSolution sol = smo_solve(gram, rows, y, C, options);
    m.converged_ = m.converged_ && sol.converged;
    m.bias_[c] = sol.bias;
    for (std::size_t a = 0; a < n; ++a) coef[a][c] = sol.alpha[a] * y[a];

    // In-sample decisions feed the calibration.
    for (std::size_t a = 0; a < n; ++a) {
      const double* K = gram.row(rows[a]);
      double s = sol.bias;
      for (std::size_t b = 0; b < n; ++b) {
        if (sol.alpha[b] > 0.0) s += sol.alpha[b] * y[b] * K[rows[b]];
      }
      decision[a] = s;
    }
    m.platt_[c] = platt_fit(decision, y);
  }

  m.support_ = FeatureMatrix(0, ts.dim());
  for (std::size_t a = 0; a < n; ++a) {
    bool used = false;
    for (double v : coef[a]) used = used || v != 0.0;
    if (!used) continue;
    m.support_.append(ts.features.row(rows[a]));
    m.coef_.insert(m.coef_.end(), coef[a].begin(), coef[a].end());
  }
  return m;
}

ClassPosterior MulticlassSvm::combine(const std::array<double, kNumClasses>& dec) const {
  ClassPosterior p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    p[c] = platt_[c].probability(dec[c]);
    sum += p[c];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    p.fill(1.0 / kNumClasses);
    return p;
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::array<double, kNumClasses> MulticlassSvm::decisions(std::span<const float> f) const {
  std::array<double, kNumClasses> dec = bias_;
  for (std::size_t s = 0; s < support_.rows(); ++s) {
    const double k = kernel_eval(kernel_, support_.row(s), f);
    const double* c = &coef_[s * kNumClasses];
    for (std::size_t cls = 0; cls < kNumClasses; ++cls) dec[cls] += c[cls] * k;
  }
  return dec;
}

ClassPosterior MulticlassSvm::posterior(std::span<const float> f) const {
  return combine(decisions(f));
}

std::vector<ClassPosterior> MulticlassSvm::posterior_batch(
    const FeatureMatrix& x, const std::function<void(double)>& progress) const {
  if (x.dim() != dim_) throw Error(ErrorCode::InvalidArgument, "feature dimension mismatch");
  const std::size_t n_sv = support_.rows();
  const std::size_t dim = dim_;
  const std::size_t split = kernel_.kind == KernelKind::Product ? dim - 3 : dim;
  const double g_mod = kernel_.kind == KernelKind::Product ? kernel_.gamma1 : kernel_.gamma;
  const double g_sp = kernel_.kind == KernelKind::Product ? kernel_.gamma2 : kernel_.gamma;

  // Support vectors transposed to one contiguous array per feature.
  std::vector<double> sv(dim * n_sv);
  for (std::size_t s = 0; s < n_sv; ++s) {
    for (std::size_t d = 0; d < dim; ++d) sv[d * n_sv + s] = support_.row(s)[d];
  }

  std::vector<ClassPosterior> out(x.rows());
  constexpr std::size_t kBlock = 8192;
  for (std::size_t start = 0; start < x.rows(); start += kBlock) {
    const std::size_t stop = std::min(x.rows(), start + kBlock);
    parallel_for(stop - start, [&](std::size_t b, std::size_t e) {
      std::vector<double> acc(n_sv);
      std::vector<double> acc2(n_sv);
      for (std::size_t r = start + b; r < start + e; ++r) {
        const auto f = x.row(r);
        std::array<double, kNumClasses> dec = bias_;
        if (kernel_.kind == KernelKind::Linear) {
          std::fill(acc.begin(), acc.end(), 0.0);
          for (std::size_t d = 0; d < dim; ++d) {
            const double q = f[d];
            const double* col = &sv[d * n_sv];
            for (std::size_t s = 0; s < n_sv; ++s) acc[s] += col[s] * q;
          }
        } else {
          std::fill(acc.begin(), acc.end(), 0.0);
          std::fill(acc2.begin(), acc2.end(), 0.0);
          for (std::size_t d = 0; d < dim; ++d) {
            const double q = f[d];
            const double* col = &sv[d * n_sv];
            double* dst = d < split ? acc.data() : acc2.data();
            for (std::size_t s = 0; s < n_sv; ++s) {
              const double diff = col[s] - q;
              dst[s] += diff * diff;
            }
          }
          for (std::size_t s = 0; s < n_sv; ++s) acc[s] = std::exp(-g_mod * acc[s] - g_sp * acc2[s]);
        }
        for (std::size_t s = 0; s < n_sv; ++s) {
          const double k = acc[s];
          const double* c = &coef_[s * kNumClasses];
          dec[0] += c[0] * k;
          dec[1] += c[1] * k;
          dec[2] += c[2] * k;
          dec[3] += c[3] * k;
        }
        out[r] = combine(dec);
      }
    }, 512);
    if (progress) progress(static_cast<double>(stop) / static_cast<double>(x.rows()));
  }
  return out;
}

}  // namespace wbseg
