#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wbseg/features.hpp"

namespace wbseg {

struct Neighbor {
  double dist2 = 0.0;
  std::size_t index = 0;

  // Distance first, then training-row index.
  bool operator<(const Neighbor& o) const {
    return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
  }
  bool operator==(const Neighbor&) const = default;
};

double squared_distance(std::span<const float> a, std::span<const float> b);

// Exhaustive scan; the reference the tree is checked against.
std::vector<Neighbor> brute_force_knn(const FeatureMatrix& points, std::span<const float> query,
                                      std::size_t k);

/// Exact k-d tree over the rows of a FeatureMatrix. Results are ordered by
/// (squared distance, row index) and match brute_force_knn exactly.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const FeatureMatrix& points, std::size_t leaf_size = 8);

  std::vector<Neighbor> knn(std::span<const float> query, std::size_t k) const;
  // Fills `out` (cleared first) to avoid allocation in hot loops.
  void knn(std::span<const float> query, std::size_t k, std::vector<Neighbor>& out) const;

  std::size_t size() const { return order_.size(); }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t axis = 0;
    float split = 0.0f;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, std::span<const float> q, std::size_t k,
              std::vector<Neighbor>& heap) const;

  FeatureMatrix points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 8;
};

}  // namespace wbseg
