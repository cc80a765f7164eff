#include "wbseg/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace wbseg {

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
    s += diff * diff;
  }
  return s;
}

namespace {

void offer(std::vector<Neighbor>& heap, std::size_t k, const Neighbor& cand) {
  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end());
  } else if (cand < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end());
  }
}

}  // namespace

std::vector<Neighbor> brute_force_knn(const FeatureMatrix& points, std::span<const float> query,
                                      std::size_t k) {
  std::vector<Neighbor> heap;
  heap.reserve(k + 1);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    offer(heap, k, {squared_distance(points.row(r), query), r});
  }
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

KdTree::KdTree(const FeatureMatrix& points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points_.rows());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!order_.empty()) build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0f});
  if (end - begin <= leaf_size_) return id;

  // Split on the widest dimension at the median.
  const std::size_t dim = points_.dim();
  std::uint32_t axis = 0;
  float best_spread = -1.0f;
  for (std::size_t d = 0; d < dim; ++d) {
    float lo = points_.row(order_[begin])[d];
    float hi = lo;
    for (std::uint32_t n = begin + 1; n < end; ++n) {
      const float v = points_.row(order_[n])[d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      axis = static_cast<std::uint32_t>(d);
    }
  }
  if (best_spread <= 0.0f) return id;  // all points identical

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_.row(a)[axis] < points_.row(b)[axis];
                   });
  const float split = points_.row(order_[mid])[axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  auto& node = nodes_[static_cast<std::size_t>(id)];
  node.left = left;
  node.right = right;
  node.axis = axis;
  node.split = split;
  return id;
}

void KdTree::search(std::int32_t id, std::span<const float> q, std::size_t k,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  if (node.left < 0) {
    for (std::uint32_t n = node.begin; n < node.end; ++n) {
      const std::uint32_t r = order_[n];
      offer(heap, k, {squared_distance(points_.row(r), q), r});
    }
    return;
  }
  // Left holds values <= split, right values >= split.
  const double diff = static_cast<double>(q[node.axis]) - static_cast<double>(node.split);
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  search(near, q, k, heap);
  // Visit on equality: an equidistant point with a lower row index still wins.
  if (heap.size() < k || diff * diff <= heap.front().dist2) search(far, q, k, heap);
}

void KdTree::knn(std::span<const float> query, std::size_t k, std::vector<Neighbor>& out) const {
  out.clear();
  if (k == 0 || nodes_.empty()) return;
  search(0, query, k, out);
  std::sort_heap(out.begin(), out.end());
}

std::vector<Neighbor> KdTree::knn(std::span<const float> query, std::size_t k) const {
  std::vector<Neighbor> out;
  out.reserve(k + 1);
  knn(query, k, out);
  return out;
}

}  // namespace wbseg
