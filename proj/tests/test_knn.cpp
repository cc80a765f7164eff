#include "support.hpp"
#include "wbseg/knn.hpp"

using namespace wbseg;

namespace {

TrainingSet points_1d(std::vector<float> xs, std::vector<TissueClass> labels) {
  TrainingSet ts;
  ts.features = FeatureMatrix(1, std::move(xs));
  ts.labels = std::move(labels);
  return ts;
}

// Posterior from an exhaustive scan, computed independently of the classifier.
ClassPosterior scan_posterior(const TrainingSet& ts, std::span<const float> q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t r = 0; r < ts.size(); ++r) {
    double d = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) {
      const double diff = static_cast<double>(ts.features.row(r)[c]) - q[c];
      d += diff * diff;
    }
    all.emplace_back(d, r);
  }
  std::sort(all.begin(), all.end());
  ClassPosterior p{};
  for (std::size_t n = 0; n < k; ++n) p[class_index(ts.labels[all[n].second])] += 1.0 / static_cast<double>(k);
  return p;
}

}  // namespace

TEST_SUITE("knn") {

TEST_CASE("k-d tree matches brute force exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (std::size_t dim : {1, 3, 6}) {
    FeatureMatrix pts(0, dim);
    std::vector<float> row(dim);
    for (int n = 0; n < 1000; ++n) {
      for (float& x : row) x = std::round(u(rng) * 20.0f) / 20.0f;  // coarse grid forces distance ties
      pts.append(row);
    }
    const KdTree tree(pts);
    for (int q = 0; q < 200; ++q) {
      for (float& x : row) x = u(rng);
      for (std::size_t k : {1, 3, 10}) CHECK(tree.knn(row, k) == brute_force_knn(pts, row, k));
    }
  }
}

TEST_CASE("indexed posteriors equal the exhaustive scan on 200 queries over 1000 points") {
  const auto ts = testing::random_training_set({400, 300, 200, 100}, 6, 17);
  const auto indexed = KnnClassifier::train(ts, 3, true);
  const auto plain = KnnClassifier::train(ts, 3, false);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  FeatureMatrix queries(200, 6);
  for (std::size_t q = 0; q < 200; ++q) {
    for (float& x : queries.row(q)) x = u(rng);
  }
  const auto batch = indexed.posterior_batch(queries);
  for (std::size_t q = 0; q < 200; ++q) {
    const auto expected = scan_posterior(ts, queries.row(q), 3);
    CHECK(indexed.posterior(queries.row(q)) == expected);
    CHECK(plain.posterior(queries.row(q)) == expected);
    CHECK(batch[q] == expected);
  }
}

TEST_CASE("vote shares") {
  const auto ts = points_1d({0.0f, 0.1f, 0.2f, 5.0f},
                            {TissueClass::Edema, TissueClass::Edema, TissueClass::Edema, TissueClass::Healthy});
  const auto knn = KnnClassifier::train(ts, 3);
  const float q[] = {0.05f};
  CHECK(knn.posterior(q) == ClassPosterior{0, 1, 0, 0});
  const auto ts2 = points_1d({0.0f, 0.1f, 0.2f, 5.0f},
                             {TissueClass::Healthy, TissueClass::Healthy, TissueClass::Edema, TissueClass::Healthy});
  const auto p = KnnClassifier::train(ts2, 3).posterior(q);
  CHECK(p[0] == doctest::Approx(2.0 / 3.0));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0));
  CHECK(argmax_class({0, 1, 0, 0}) == TissueClass::Edema);
}

TEST_CASE("vote tie goes to the class of the nearest member") {
  const auto ts = points_1d({0.0f, 0.3f, 0.5f, 0.9f},
                            {TissueClass::Healthy, TissueClass::Edema, TissueClass::Edema, TissueClass::Healthy});
  const auto knn = KnnClassifier::train(ts, 4);
  const float q[] = {0.35f};
  const auto p = knn.posterior(q);
  CHECK(p[0] == p[1]);
  CHECK(knn.classify(q) == TissueClass::Edema);
  CHECK(knn.decide(q, p) == TissueClass::Edema);
}

TEST_CASE("classify agrees with the posterior argmax when there is no tie") {
  const auto ts = testing::random_training_set({50, 50, 50, 50}, 3, 8);
  const auto knn = KnnClassifier::train(ts, 5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int q = 0; q < 300; ++q) {
    const float f[] = {u(rng), u(rng), u(rng)};
    const auto p = knn.posterior(f);
    const double top = *std::max_element(p.begin(), p.end());
    if (std::count(p.begin(), p.end(), top) > 1) continue;
    CHECK(knn.classify(f) == argmax_class(p));
  }
}

TEST_CASE("k must not exceed the training size") {
  CHECK_NOTHROW(KnnClassifier::train(testing::random_training_set({4, 3, 2, 1}, 3, 1), 3));
  CHECK_ERROR_CODE(KnnClassifier::train(testing::random_training_set({1, 1, 0, 0}, 3, 1), 3),
                   ErrorCode::KTooLarge);
}

}
