#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "wbseg/strokes.hpp"
#include "wbseg/volume.hpp"

namespace wbseg {

/// Row-major matrix of 32-bit features; one row per sample.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim) : dim_(dim), values_(rows * dim, 0.0f) {}
  FeatureMatrix(std::size_t dim, std::vector<float> values);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(values_).subspan(r * dim_, dim_);
  }
  std::span<float> row(std::size_t r) { return std::span<float>(values_).subspan(r * dim_, dim_); }
  std::span<const float> values() const { return values_; }

  void append(std::span<const float> row);
  FeatureMatrix select(std::span<const std::size_t> rows) const;
  std::size_t bytes() const { return values_.size() * sizeof(float); }

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

/// Per-modality min-max normalised intensities in the volume's layout.
struct NormalizedIntensities {
  Dims dims;
  std::size_t modalities = 0;
  std::vector<float> values;

  std::span<const float> channel(std::size_t m) const {
    return std::span<const float>(values).subspan(m * dims.voxels(), dims.voxels());
  }
};

// Statistics are taken over in-mask voxels only; a constant channel maps to
// zero and out-of-mask voxels stay zero.
NormalizedIntensities normalize_modalities(const MultiModalVolume& vol, const BrainMask& mask);

struct VoxelFeatures {
  FeatureMatrix features;
  std::vector<std::size_t> voxel_of_row;   // row -> linear voxel
  std::vector<std::int32_t> row_of_voxel;  // linear voxel -> row, -1 outside mask
  bool spatial = true;

  std::size_t store_bytes() const { return features.bytes(); }
};

// Rows are (m1..mM, x, y, z) with x = i/(W-1) etc. (0 for unit extents), or
// the modality part alone when `include_spatial` is false.
VoxelFeatures featurize(const NormalizedIntensities& norm, const BrainMask& mask,
                        bool include_spatial = true);

struct TrainingSet {
  FeatureMatrix features;
  std::vector<TissueClass> labels;
  std::vector<VoxelIndex> sources;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.dim(); }
  std::array<std::size_t, kNumClasses> class_counts() const;
  std::size_t distinct_classes() const;
  TrainingSet subset(std::span<const std::size_t> rows) const;
};

TrainingSet build_training_set(const VoxelFeatures& vf, const Dims& dims, const StrokeSet& strokes);

// Healthy and non-healthy rows are sampled separately, quotas by largest
// remainder, at least two kept per represented class. Identity when
// size() <= target_n. Selected rows keep their original order.
TrainingSet subsample_balanced(const TrainingSet& ts, std::size_t target_n, std::uint64_t seed);
std::vector<std::size_t> subsample_rows(const TrainingSet& ts, std::size_t target_n,
                                        std::uint64_t seed);

// Quotas summing to `total`, proportional to `weights`, largest remainder,
// ties to the lower index.
std::vector<std::size_t> largest_remainder(std::span<const std::size_t> weights, std::size_t total);

}  // namespace wbseg
