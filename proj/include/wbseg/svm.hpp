#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "wbseg/classifier.hpp"
#include "wbseg/features.hpp"

namespace wbseg {

enum class KernelKind { Linear, Rbf, Product };

/// Kernel family and bandwidths. The product kernel applies `gamma1` to the
/// modality block (all but the last three features) and `gamma2` to the
/// trailing spatial block.
struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;

  static KernelSpec linear() { return {KernelKind::Linear, 0.0, 0.0, 0.0}; }
  static KernelSpec rbf(double gamma) { return {KernelKind::Rbf, gamma, 0.0, 0.0}; }
  static KernelSpec product(double gamma1, double gamma2) {
    return {KernelKind::Product, 0.0, gamma1, gamma2};
  }

  // Throws InvalidArgument for missing/non-positive bandwidths and
  // ProductKernelNeedsSpatial when a product kernel meets < 4 features.
  void validate(std::size_t dim) const;
  std::string describe() const;
};

double kernel_eval(const KernelSpec& spec, std::span<const float> a, std::span<const float> b);

/// Dense symmetric kernel matrix over the rows of a feature matrix.
class GramMatrix {
 public:
  GramMatrix(const FeatureMatrix& x, const KernelSpec& spec);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  const double* row(std::size_t i) const { return values_.data() + i * n_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

struct SmoOptions {
  double tolerance = 1e-3;
  std::size_t max_iterations = 100000;
};

struct SmoSolution {
  std::vector<double> alpha;
  double bias = 0.0;  // decision = sum(alpha_i y_i K_i) + bias
  bool converged = false;
  std::size_t iterations = 0;
  double max_violation = 0.0;   // max over I_up of -yG minus min over I_low
  double dual_objective = 0.0;  // sum(alpha) - 1/2 alpha^T Q alpha
};

// Soft-margin dual by SMO with maximal-violating-pair selection. `rows`
// selects the training rows of `gram`; `y` holds matching +1/-1 labels.
SmoSolution smo_solve(const GramMatrix& gram, std::span<const std::size_t> rows,
                      std::span<const int> y, double C, const SmoOptions& options = {});

struct BinarySvmModel {
  KernelSpec kernel;
  double C = 1.0;
  FeatureMatrix support;
  std::vector<double> coef;  // alpha_i * y_i per support vector
  double bias = 0.0;
  SmoSolution solution;       // full dual state over the training rows
};

BinarySvmModel smo_train_binary(const FeatureMatrix& x, std::span<const int> y, double C,
                                const KernelSpec& kernel, const SmoOptions& options = {});

double svm_decision(const BinarySvmModel& model, std::span<const float> f);

/// Sigmoid calibration p = 1 / (1 + exp(A f + B)).
struct PlattCalibration {
  double A = 0.0;
  double B = 0.0;

  double probability(double decision) const;
};

// Newton fit against smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2).
PlattCalibration platt_fit(std::span<const double> decisions, std::span<const int> labels);

/// One-vs-rest SVM over the four tissue classes with per-class Platt
/// calibration; posteriors are the renormalised calibrated scores.
class MulticlassSvm final : public Classifier {
 public:
  static MulticlassSvm train(const TrainingSet& ts, double C, const KernelSpec& kernel,
                             const SmoOptions& options = {});
  // Trains on `rows` of `ts`, reusing a Gram matrix built over all of `ts`.
  static MulticlassSvm train_on_rows(const TrainingSet& ts, const GramMatrix& gram,
                                     std::span<const std::size_t> rows, double C,
                                     const KernelSpec& kernel, const SmoOptions& options = {});

  std::size_t dim() const override { return dim_; }
  ClassPosterior posterior(std::span<const float> f) const override;
  std::vector<ClassPosterior> posterior_batch(
      const FeatureMatrix& x, const std::function<void(double)>& progress = {}) const override;

  std::array<double, kNumClasses> decisions(std::span<const float> f) const;
  const PlattCalibration& calibration(std::size_t c) const { return platt_[c]; }
  const KernelSpec& kernel() const { return kernel_; }
  double C() const { return C_; }
  bool converged() const { return converged_; }
  std::size_t support_count() const { return support_.rows(); }

 private:
  ClassPosterior combine(const std::array<double, kNumClasses>& dec) const;

  KernelSpec kernel_;
  double C_ = 1.0;
  std::size_t dim_ = 0;
  bool converged_ = true;
  // Union of support vectors over the four problems; coef_ is row-major
  // [support x class] holding alpha*y (zero where a row is not a support
  // vector of that class).
  FeatureMatrix support_;
  std::vector<double> coef_;
  std::array<double, kNumClasses> bias_{};
  std::array<PlattCalibration, kNumClasses> platt_{};
};

}  // namespace wbseg
