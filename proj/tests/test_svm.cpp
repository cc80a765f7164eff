#include <Eigen/Dense>
#include <numeric>

#include "oracles.hpp"
#include "support.hpp"
#include "wbseg/svm.hpp"

using namespace wbseg;

namespace {

FeatureMatrix random_points(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  FeatureMatrix x(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (float& v : x.row(r)) v = u(rng);
  }
  return x;
}

double min_eigenvalue(const GramMatrix& g) {
  Eigen::MatrixXd m(g.size(), g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) m(i, j) = g(i, j);
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Bias from the oracle's free support vectors (box midpoint when none is free).
double oracle_bias(const GramMatrix& K, const std::vector<int>& y, const std::vector<double>& a, double C) {
  double sum = 0.0, lo = -1e300, hi = 1e300;
  std::size_t free = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) g += a[j] * y[j] * K(i, j);
    const double b = y[i] - g;
    if (a[i] > 1e-6 && a[i] < C - 1e-6) {
      sum += b;
      ++free;
    } else if ((y[i] > 0) == (a[i] <= 1e-6)) {
      lo = std::max(lo, b);
    } else {
      hi = std::min(hi, b);
    }
  }
  return free > 0 ? sum / static_cast<double>(free) : 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("rbf self-similarity is one") {
  std::mt19937_64 rng(1);
  const auto x = random_points(10, 6, rng);
  for (double g : {0.01, 1.0, 100.0}) {
    for (std::size_t r = 0; r < 10; ++r) CHECK(kernel_eval(KernelSpec::rbf(g), x.row(r), x.row(r)) == 1.0);
  }
}

TEST_CASE("product kernel with equal bandwidths is the rbf kernel") {
  std::mt19937_64 rng(2);
  const auto a = random_points(1000, 6, rng);
  const auto b = random_points(1000, 6, rng);
  std::uniform_real_distribution<double> lg(-2.0, 2.0);
  for (std::size_t r = 0; r < 1000; ++r) {
    const double g = std::pow(10.0, lg(rng));
    const double p = kernel_eval(KernelSpec::product(g, g), a.row(r), b.row(r));
    CHECK(std::fabs(p - kernel_eval(KernelSpec::rbf(g), a.row(r), b.row(r))) <= 1e-12);
  }
}

TEST_CASE("product kernel factorises over the modality and spatial blocks") {
  std::mt19937_64 rng(3);
  const auto a = random_points(50, 6, rng);
  const auto b = random_points(50, 6, rng);
  for (std::size_t r = 0; r < 50; ++r) {
    const auto am = a.row(r).first(3), bm = b.row(r).first(3);
    const auto as = a.row(r).last(3), bs = b.row(r).last(3);
    const double expected = kernel_eval(KernelSpec::rbf(7.0), am, bm) * kernel_eval(KernelSpec::rbf(0.3), as, bs);
    CHECK(kernel_eval(KernelSpec::product(7.0, 0.3), a.row(r), b.row(r)) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("Gram matrices are positive semi-definite") {
  const std::vector<KernelSpec> kernels{KernelSpec::linear(), KernelSpec::rbf(1.0), KernelSpec::rbf(50.0),
                                        KernelSpec::product(100.0, 10.0)};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const auto x = random_points(20, 6, rng);
    for (const auto& k : kernels) CHECK(min_eigenvalue(GramMatrix(x, k)) >= -1e-9);
  }
}

TEST_CASE("kernel validation") {
  CHECK_ERROR_CODE(KernelSpec::product(1.0, 1.0).validate(3), ErrorCode::ProductKernelNeedsSpatial);
  CHECK_NOTHROW(KernelSpec::product(1.0, 1.0).validate(6));
  CHECK_ERROR_CODE(KernelSpec::rbf(0.0).validate(6), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(KernelSpec::product(1.0, -1.0).validate(6), ErrorCode::InvalidArgument);
}

TEST_CASE("two-point linear SVM is f(x) = 2x - 1") {
  const FeatureMatrix x(1, {0.0f, 1.0f});
  const std::vector<int> y{-1, 1};
  const auto model = smo_train_binary(x, y, 10.0, KernelSpec::linear());
  for (float v : {-1.0f, 0.0f, 0.25f, 0.5f, 1.0f, 2.0f}) {
    const float f[] = {v};
    CHECK(std::fabs(svm_decision(model, f) - (2.0 * v - 1.0)) <= 1e-3);
  }
  const float mid[] = {0.5f};
  CHECK(std::fabs(svm_decision(model, mid)) <= 1e-3);
}

TEST_CASE("XOR is separated by an rbf kernel") {
  const FeatureMatrix x(2, {0, 0, 1, 1, 0, 1, 1, 0});
  const std::vector<int> y{1, 1, -1, -1};
  const auto model = smo_train_binary(x, y, 100.0, KernelSpec::rbf(1.0));
  for (std::size_t r = 0; r < 4; ++r) CHECK(svm_decision(model, x.row(r)) * y[r] > 0.0);
}

TEST_CASE("SMO matches the projected-gradient QP oracle") {
  std::uniform_real_distribution<double> cdist(0.5, 5.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    const auto x = random_points(10, 2, rng);
    std::vector<int> y(10);
    for (std::size_t r = 0; r < 10; ++r) y[r] = (x.row(r)[0] + 0.3 * x.row(r)[1] > 0.65) ? 1 : -1;
    y[0] = 1;
    y[1] = -1;
    const double C = cdist(rng);
    const KernelSpec kernel = KernelSpec::rbf(2.0);
    const GramMatrix gram(x, kernel);
    std::vector<std::size_t> rows(10);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const SmoSolution sol = smo_solve(gram, rows, y, C);
    const auto qp = oracle::solve_dual_qp(gram, y, C);
    CHECK(sol.converged);
    CHECK(sol.max_violation <= 1e-3);
    CHECK(std::fabs(sol.dual_objective - qp.objective) <= 1e-4);

    // Held-out sign agreement with the oracle's decision function.
    const auto model = smo_train_binary(x, y, C, kernel);
    const double b = oracle_bias(gram, y, qp.alpha, C);
    const auto probes = random_points(50, 2, rng);
    for (std::size_t p = 0; p < 50; ++p) {
      double f = b;
      for (std::size_t j = 0; j < 10; ++j) f += qp.alpha[j] * y[j] * kernel_eval(kernel, x.row(j), probes.row(p));
      if (std::fabs(f) < 1e-2) continue;
      CHECK(svm_decision(model, probes.row(p)) * f > 0.0);
    }
  }
}

TEST_CASE("decision does not depend on support-vector order") {
  std::mt19937_64 rng(4);
  const auto x = random_points(30, 3, rng);
  std::vector<int> y(30);
  for (std::size_t r = 0; r < 30; ++r) y[r] = x.row(r)[0] > 0.5 ? 1 : -1;
  const auto model = smo_train_binary(x, y, 1.0, KernelSpec::rbf(3.0));
  BinarySvmModel reversed = model;
  reversed.support = FeatureMatrix(0, 3);
  reversed.coef.clear();
  for (std::size_t s = model.coef.size(); s-- > 0;) {
    reversed.support.append(model.support.row(s));
    reversed.coef.push_back(model.coef[s]);
  }
  const auto probes = random_points(20, 3, rng);
  for (std::size_t p = 0; p < 20; ++p) {
    CHECK(svm_decision(reversed, probes.row(p)) == doctest::Approx(svm_decision(model, probes.row(p))).epsilon(1e-12));
  }
}

TEST_CASE("binary SVM needs both labels") {
  const FeatureMatrix x(1, {0.0f, 1.0f});
  const std::vector<int> y{1, 1};
  CHECK_ERROR_CODE(smo_train_binary(x, y, 1.0, KernelSpec::linear()), ErrorCode::SingleClassInput);
}

TEST_CASE("Platt sigmoid") {
  CHECK(PlattCalibration{0.0, 0.0}.probability(0.0) == 0.5);
  const PlattCalibration steep{-50.0, 0.0};
  for (double f : {-100.0, -1.0, 0.0, 1.0, 100.0}) {
    const double p = steep.probability(f);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("Platt fit recovers a known sigmoid") {
  const double A = -2.0, B = 0.5;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> fd(-3.0, 3.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> dec(20000);
  std::vector<int> lab(20000);
  for (std::size_t i = 0; i < dec.size(); ++i) {
    dec[i] = fd(rng);
    lab[i] = u(rng) < 1.0 / (1.0 + std::exp(A * dec[i] + B)) ? 1 : -1;
  }
  const auto fit = platt_fit(dec, lab);
  CHECK(std::fabs(fit.A - A) <= 0.1);
  CHECK(std::fabs(fit.B - B) <= 0.1);
  for (double f : dec) {
    const double p = fit.probability(f);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  const std::vector<int> one_label(dec.size(), 1);
  CHECK_ERROR_CODE(platt_fit(dec, one_label), ErrorCode::DegenerateLabels);
}

TEST_CASE("multiclass posteriors sum to one and separate a clustered toy set") {
  TrainingSet ts;
  ts.features = FeatureMatrix(0, 2);
  std::mt19937_64 rng(6);
  std::normal_distribution<float> jitter(0.0f, 0.03f);
  const float centres[4][2] = {{0.1f, 0.1f}, {0.9f, 0.1f}, {0.1f, 0.9f}, {0.9f, 0.9f}};
  for (std::size_t c = 0; c < 4; ++c) {
    for (int n = 0; n < 15; ++n) {
      const float row[] = {centres[c][0] + jitter(rng), centres[c][1] + jitter(rng)};
      ts.features.append(row);
      ts.labels.push_back(static_cast<TissueClass>(c));
    }
  }
  for (const auto& kernel : {KernelSpec::linear(), KernelSpec::rbf(5.0)}) {
    const auto svm = MulticlassSvm::train(ts, 10.0, kernel);
    for (std::size_t r = 0; r < ts.size(); ++r) CHECK(argmax_class(svm.posterior(ts.features.row(r))) == ts.labels[r]);
    const auto probes = random_points(100, 2, rng);
    for (const auto& p : svm.posterior_batch(probes)) {
      CHECK(std::fabs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9);
    }
  }
  ts.labels.back() = TissueClass::Healthy;
  for (auto& l : ts.labels) {
    if (l == TissueClass::Enhancing) l = TissueClass::Edema;
  }
  CHECK_ERROR_CODE(MulticlassSvm::train(ts, 1.0, KernelSpec::linear()), ErrorCode::SingleClassInput);
}

}
