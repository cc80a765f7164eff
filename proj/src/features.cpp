#include "wbseg/features.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "wbseg/error.hpp"
#include "wbseg/parallel.hpp"

namespace wbseg {

FeatureMatrix::FeatureMatrix(std::size_t dim, std::vector<float> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 || values_.size() % dim_ != 0) {
    throw Error(ErrorCode::InvalidArgument, "feature buffer is not a whole number of rows");
  }
}

void FeatureMatrix::append(std::span<const float> row) {
  if (dim_ == 0) dim_ = row.size();
  if (row.size() != dim_) throw Error(ErrorCode::InvalidArgument, "feature row dimension mismatch");
  values_.insert(values_.end(), row.begin(), row.end());
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
  FeatureMatrix out(rows.size(), dim_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

NormalizedIntensities normalize_modalities(const MultiModalVolume& vol, const BrainMask& mask) {
  if (mask.dims() != vol.dims()) throw Error(ErrorCode::DimsMismatch, "mask dims differ from volume");
  if (mask.count() == 0) throw Error(ErrorCode::EmptyMask, "brain mask is empty");
  const std::size_t n = vol.dims().voxels();
  NormalizedIntensities out{vol.dims(), vol.modality_count(),
                            std::vector<float>(vol.modality_count() * n, 0.0f)};
  for (std::size_t m = 0; m < vol.modality_count(); ++m) {
    const auto ch = vol.channel(m);
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (std::size_t v = 0; v < n; ++v) {
      if (!mask.contains(v)) continue;
      lo = std::min(lo, ch[v]);
      hi = std::max(hi, ch[v]);
    }
    if (!(hi > lo)) continue;
    const double range = static_cast<double>(hi) - lo;
    float* dst = out.values.data() + m * n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!mask.contains(v)) continue;
      const double t = (static_cast<double>(ch[v]) - lo) / range;
      dst[v] = static_cast<float>(std::clamp(t, 0.0, 1.0));
    }
  }
  return out;
}

VoxelFeatures featurize(const NormalizedIntensities& norm, const BrainMask& mask,
                        bool include_spatial) {
  if (mask.dims() != norm.dims) throw Error(ErrorCode::DimsMismatch, "mask dims differ from volume");
  const Dims& dims = norm.dims;
  const std::size_t n = dims.voxels();
  const std::size_t dim = norm.modalities + (include_spatial ? 3 : 0);

  VoxelFeatures vf;
  vf.spatial = include_spatial;
  vf.voxel_of_row.reserve(mask.count());
  vf.row_of_voxel.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (!mask.contains(v)) continue;
    vf.row_of_voxel[v] = static_cast<std::int32_t>(vf.voxel_of_row.size());
    vf.voxel_of_row.push_back(v);
  }
  vf.features = FeatureMatrix(vf.voxel_of_row.size(), dim);

  auto scale = [](std::size_t x, std::size_t extent) {
    return extent > 1 ? static_cast<float>(static_cast<double>(x) / static_cast<double>(extent - 1))
                      : 0.0f;
  };
  parallel_for(vf.voxel_of_row.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t lin = vf.voxel_of_row[r];
      auto row = vf.features.row(r);
      for (std::size_t m = 0; m < norm.modalities; ++m) row[m] = norm.values[m * n + lin];
      if (include_spatial) {
        const VoxelIndex idx = dims.unravel(lin);
        row[norm.modalities + 0] = scale(idx.i, dims.w);
        row[norm.modalities + 1] = scale(idx.j, dims.h);
        row[norm.modalities + 2] = scale(idx.k, dims.d);
      }
    }
  });
  return vf;
}

std::array<std::size_t, kNumClasses> TrainingSet::class_counts() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (auto c : labels) ++counts[class_index(c)];
  return counts;
}

std::size_t TrainingSet::distinct_classes() const {
  const auto counts = class_counts();
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(),
                                                [](std::size_t c) { return c > 0; }));
}

TrainingSet TrainingSet::subset(std::span<const std::size_t> rows) const {
  TrainingSet out;
  out.features = features.select(rows);
  out.labels.reserve(rows.size());
  out.sources.reserve(rows.size());
  for (auto r : rows) {
    out.labels.push_back(labels[r]);
    if (!sources.empty()) out.sources.push_back(sources[r]);
  }
  return out;
}

TrainingSet build_training_set(const VoxelFeatures& vf, const Dims& dims, const StrokeSet& strokes) {
  if (vf.row_of_voxel.size() != dims.voxels()) {
    throw Error(ErrorCode::DimsMismatch, "feature index map does not match dims");
  }
  TrainingSet ts;
  ts.features = FeatureMatrix(0, vf.features.dim());
  for (const auto& s : strokes.entries()) {
    if (!dims.contains(s.voxel)) {
      throw Error(ErrorCode::IndexOutOfRange, "stroke voxel outside volume bounds");
    }
    const auto row = vf.row_of_voxel[dims.linear(s.voxel)];
    if (row < 0) {
      throw Error(ErrorCode::StrokeOutsideMask,
                  "stroke at (" + std::to_string(s.voxel.i) + "," + std::to_string(s.voxel.j) +
                      "," + std::to_string(s.voxel.k) + ") lies outside the brain mask");
    }
    ts.features.append(vf.features.row(static_cast<std::size_t>(row)));
    ts.labels.push_back(s.label);
    ts.sources.push_back(s.voxel);
  }
  return ts;
}

std::vector<std::size_t> largest_remainder(std::span<const std::size_t> weights, std::size_t total) {
  const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::vector<std::size_t> quota(weights.size(), 0);
  if (sum == 0) return quota;
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder numerator, index)
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto exact = static_cast<unsigned __int128>(weights[i]) * total;
    quota[i] = static_cast<std::size_t>(exact / sum);
    remainders.emplace_back(static_cast<std::size_t>(exact % sum), i);
    assigned += quota[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned) {
    ++quota[remainders[r].second];
  }
  return quota;
}

std::vector<std::size_t> subsample_rows(const TrainingSet& ts, std::size_t target_n,
                                        std::uint64_t seed) {
  if (target_n < 8) {
    throw Error(ErrorCode::TargetTooSmall, "subsample target must be at least 8");
  }
  std::vector<std::size_t> all(ts.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (ts.size() <= target_n) return all;

  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t r = 0; r < ts.size(); ++r) by_class[class_index(ts.labels[r])].push_back(r);

  const std::size_t n_healthy = by_class[0].size();
  const std::size_t n_sick = ts.size() - n_healthy;
  const std::array<std::size_t, 2> group_sizes{n_healthy, n_sick};
  const auto group_quota = largest_remainder(group_sizes, target_n);

  std::array<std::size_t, kNumClasses> quota{};
  quota[0] = group_quota[0];
  const std::array<std::size_t, 3> sick_sizes{by_class[1].size(), by_class[2].size(),
                                              by_class[3].size()};
  const auto sick_quota = largest_remainder(sick_sizes, group_quota[1]);
  for (std::size_t c = 1; c < kNumClasses; ++c) quota[c] = sick_quota[c - 1];

  // Minimum of two per represented class, paid for by the largest quota,
  // preferring donors from the same healthy/non-healthy group.
  auto group_of = [](std::size_t c) { return c == 0 ? 0 : 1; };
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::size_t need = std::min<std::size_t>(2, by_class[c].size());
    while (quota[c] < need) {
      std::size_t donor = kNumClasses;
      for (int pass = 0; pass < 2 && donor == kNumClasses; ++pass) {
        for (std::size_t d = 0; d < kNumClasses; ++d) {
          if (d == c) continue;
          if (pass == 0 && group_of(d) != group_of(c)) continue;
          const std::size_t floor_d = std::min<std::size_t>(2, by_class[d].size());
          if (quota[d] <= floor_d) continue;
          if (donor == kNumClasses || quota[d] > quota[donor]) donor = d;
        }
      }
      if (donor == kNumClasses) break;
      --quota[donor];
      ++quota[c];
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(target_n);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto pool = by_class[c];
    const std::size_t take = std::min(quota[c], pool.size());
    for (std::size_t t = 0; t < take; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
      std::swap(pool[t], pool[pick(rng)]);
      picked.push_back(pool[t]);
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

TrainingSet subsample_balanced(const TrainingSet& ts, std::size_t target_n, std::uint64_t seed) {
  const auto rows = subsample_rows(ts, target_n, seed);
  if (rows.size() == ts.size()) return ts;
  return ts.subset(rows);
}

}  // namespace wbseg
