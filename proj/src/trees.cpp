#include "wbseg/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wbseg/error.hpp"
#include "wbseg/parallel.hpp"

namespace wbseg {

ClassPosterior leaf_posterior(const std::array<std::uint32_t, kNumClasses>& counts) {
  ClassPosterior p{};
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total <= 0.0) {
    p.fill(1.0 / kNumClasses);
    return p;
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) p[c] = counts[c] / total;
  return p;
}

namespace {

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  float threshold = 0.0f;
  double score = -1.0;  // sum over children of sum_c n_c^2 / n (higher is purer)
};

float midpoint(float a, float b) {
  float m = a + (b - a) / 2.0f;
  if (!(m < b)) m = a;
  return m;
}

void best_split_on(const FeatureMatrix& x, std::span<const TissueClass> labels,
                   std::span<const std::size_t> rows, std::size_t feature, std::size_t min_leaf,
                   std::vector<std::pair<float, std::uint8_t>>& scratch, SplitChoice& best) {
  const std::size_t n = rows.size();
  scratch.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    scratch[a] = {x.row(rows[a])[feature], static_cast<std::uint8_t>(labels[rows[a]])};
  }
  std::sort(scratch.begin(), scratch.end());
  if (scratch.front().first == scratch.back().first) return;

  std::array<double, kNumClasses> total{};
  for (const auto& s : scratch) total[s.second] += 1.0;
  std::array<double, kNumClasses> left{};
  for (std::size_t p = 1; p < n; ++p) {
    left[scratch[p - 1].second] += 1.0;
    if (scratch[p - 1].first == scratch[p].first) continue;
    if (p < min_leaf || n - p < min_leaf) continue;
    const double nl = static_cast<double>(p);
    const double nr = static_cast<double>(n - p);
    double sl = 0.0, sr = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      sl += left[c] * left[c];
      const double r = total[c] - left[c];
      sr += r * r;
    }
    const double score = sl / nl + sr / nr;
    if (!best.found || score > best.score) {
      best = {true, feature, midpoint(scratch[p - 1].first, scratch[p].first), score};
    }
  }
}

}  // namespace

DecisionTree DecisionTree::fit(const FeatureMatrix& x, std::span<const TissueClass> labels,
                               std::span<const std::size_t> rows, std::size_t mtry,
                               std::size_t min_leaf, std::mt19937_64& rng) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "cannot fit a tree on zero rows");
  min_leaf = std::max<std::size_t>(1, min_leaf);
  const std::size_t dim = x.dim();
  mtry = std::clamp<std::size_t>(mtry, 1, dim);

  DecisionTree tree;
  struct Work {
    std::int32_t node;
    std::vector<std::size_t> rows;
  };
  std::vector<Work> stack;
  tree.nodes_.push_back({});
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end())});
  std::vector<std::pair<float, std::uint8_t>> scratch;
  std::vector<std::size_t> features(dim);

  while (!stack.empty()) {
    Work work = std::move(stack.back());
    stack.pop_back();
    auto& counts = tree.nodes_[static_cast<std::size_t>(work.node)].counts;
    for (auto r : work.rows) ++counts[class_index(labels[r])];
    const auto nonzero = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
    if (nonzero <= 1 || work.rows.size() < 2 * min_leaf) continue;

    std::iota(features.begin(), features.end(), std::size_t{0});
    std::shuffle(features.begin(), features.end(), rng);
    SplitChoice best;
    for (std::size_t f = 0; f < dim; ++f) {
      if (f >= mtry && best.found) break;
      best_split_on(x, labels, work.rows, features[f], min_leaf, scratch, best);
    }
    if (!best.found) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : work.rows) {
      (x.row(r)[best.feature] <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    const auto left_id = static_cast<std::int32_t>(tree.nodes_.size());
    tree.nodes_.push_back({});
    tree.nodes_.push_back({});
    auto& node = tree.nodes_[static_cast<std::size_t>(work.node)];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = left_id;
    node.right = left_id + 1;
    stack.push_back({left_id + 1, std::move(right_rows)});
    stack.push_back({left_id, std::move(left_rows)});
  }
  return tree;
}

const DecisionTree::Node& DecisionTree::leaf_for(std::span<const float> f) const {
  std::size_t id = 0;
  while (nodes_[id].feature >= 0) {
    const auto& n = nodes_[id];
    id = static_cast<std::size_t>(f[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes_[id];
}

ClassPosterior DecisionTree::posterior(std::span<const float> f) const {
  return leaf_posterior(leaf_for(f).counts);
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

DecisionTree fit_tree(const TrainingSet& ts, std::size_t mtry, std::size_t min_leaf,
                      std::mt19937_64& rng) {
  std::vector<std::size_t> rows(ts.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return DecisionTree::fit(ts.features, ts.labels, rows, mtry, min_leaf, rng);
}

RandomForest RandomForest::train(const TrainingSet& ts, const ForestOptions& options,
                                 std::uint64_t seed) {
  if (ts.size() < 2 || ts.distinct_classes() < 2) {
    throw Error(ErrorCode::SingleClassInput, "forest needs at least two rows of two classes");
  }
  if (options.n_trees == 0) throw Error(ErrorCode::InvalidArgument, "n_trees must be positive");

  // Per-tree seeds are fixed up front so trees can be fitted in any order.
  std::mt19937_64 master(seed);
  std::vector<std::uint64_t> seeds(options.n_trees);
  for (auto& s : seeds) s = master();

  RandomForest forest;
  forest.dim_ = ts.dim();
  forest.trees_.resize(options.n_trees);
  parallel_for(options.n_trees, [&](std::size_t b, std::size_t e) {
    std::vector<std::size_t> bag(ts.size());
    for (std::size_t t = b; t < e; ++t) {
      std::mt19937_64 rng(seeds[t]);
      std::uniform_int_distribution<std::size_t> pick(0, ts.size() - 1);
      for (auto& r : bag) r = pick(rng);
      forest.trees_[t] =
          DecisionTree::fit(ts.features, ts.labels, bag, options.mtry, options.min_leaf, rng);
    }
  }, 8);
  return forest;
}

RandomForest RandomForest::from_trees(std::vector<DecisionTree> trees, std::size_t dim) {
  RandomForest f;
  f.trees_ = std::move(trees);
  f.dim_ = dim;
  return f;
}

ClassPosterior RandomForest::posterior(std::span<const float> f) const {
  ClassPosterior p{};
  for (const auto& tree : trees_) {
    const auto tp = tree.posterior(f);
    for (std::size_t c = 0; c < kNumClasses; ++c) p[c] += tp[c];
  }
  for (auto& v : p) v /= static_cast<double>(trees_.size());
  return p;
}

Stump fit_stump(const FeatureMatrix& x, std::span<const TissueClass> labels,
                std::span<const double> weights, double* weighted_error) {
  const std::size_t n = x.rows();
  std::array<double, kNumClasses> total{};
  for (std::size_t r = 0; r < n; ++r) total[class_index(labels[r])] += weights[r];
  const double mass = std::accumulate(total.begin(), total.end(), 0.0);

  auto argmax = [](const std::array<double, kNumClasses>& a) {
    return static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
  };
  Stump best;
  best.left = best.right = static_cast<TissueClass>(argmax(total));
  double best_err = mass - total[argmax(total)];

  std::vector<std::size_t> order(n);
  for (std::size_t f = 0; f < x.dim(); ++f) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const float va = x.row(a)[f], vb = x.row(b)[f];
      return va < vb || (va == vb && a < b);
    });
    std::array<double, kNumClasses> left{};
    for (std::size_t p = 1; p < n; ++p) {
      left[class_index(labels[order[p - 1]])] += weights[order[p - 1]];
      const float lo = x.row(order[p - 1])[f];
      const float hi = x.row(order[p])[f];
      if (lo == hi) continue;
      std::array<double, kNumClasses> right{};
      for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = total[c] - left[c];
      const std::size_t cl = argmax(left);
      const std::size_t cr = argmax(right);
      const double err = mass - left[cl] - right[cr];
      if (err < best_err - 1e-15) {
        best_err = err;
        best = {static_cast<std::int32_t>(f), midpoint(lo, hi), static_cast<TissueClass>(cl),
                static_cast<TissueClass>(cr)};
      }
    }
  }
  if (weighted_error) *weighted_error = std::max(0.0, best_err);
  return best;
}

AdaBoostStumps AdaBoostStumps::train(const TrainingSet& ts, std::size_t rounds) {
  if (ts.distinct_classes() < 2) {
    throw Error(ErrorCode::SingleClassInput, "boosting needs at least two classes");
  }
  constexpr double K = static_cast<double>(kNumClasses);
  constexpr double kMinError = 1e-10;
  const std::size_t n = ts.size();

  AdaBoostStumps model;
  model.dim_ = ts.dim();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<std::array<double, kNumClasses>> votes(n, std::array<double, kNumClasses>{});

  for (std::size_t t = 0; t < rounds; ++t) {
    double err = 0.0;
    const Stump stump = fit_stump(ts.features, ts.labels, w, &err);
    if (err >= 1.0 - 1.0 / K) break;
    const bool perfect = err <= 0.0;
    const double e = std::max(err, kMinError);
    const double beta = std::log((1.0 - e) / e) + std::log(K - 1.0);

    std::size_t wrong = 0;
    double mass = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const auto pred = stump.predict(ts.features.row(r));
      votes[r][class_index(pred)] += beta;
      if (pred != ts.labels[r]) w[r] *= std::exp(beta);
      mass += w[r];
      const auto& v = votes[r];
      const auto top = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
      if (top != class_index(ts.labels[r])) ++wrong;
    }
    for (auto& wr : w) wr /= mass;
    model.rounds_.push_back({stump, beta, err, static_cast<double>(wrong) / static_cast<double>(n)});
    if (perfect) break;
  }
  return model;
}

AdaBoostStumps AdaBoostStumps::from_rounds(std::vector<BoostRound> rounds, std::size_t dim) {
  AdaBoostStumps m;
  m.rounds_ = std::move(rounds);
  m.dim_ = dim;
  return m;
}

ClassPosterior AdaBoostStumps::posterior(std::span<const float> f) const {
  ClassPosterior p{};
  double total = 0.0;
  for (const auto& r : rounds_) {
    p[class_index(r.stump.predict(f))] += r.weight;
    total += r.weight;
  }
  if (!(total > 0.0)) {
    p.fill(1.0 / kNumClasses);
    return p;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace wbseg
