#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wbseg/volume.hpp"

namespace wbseg {

enum class Region { Complete, Core, Enhancing };

inline constexpr std::array<Region, 3> kRegions{Region::Complete, Region::Core, Region::Enhancing};

std::string_view to_string(Region region);
bool region_contains(Region region, TissueClass c);

enum class MetricsScope { Mask, Full };

MetricsScope scope_from_string(std::string_view name);
std::string_view to_string(MetricsScope scope);

// 1 where the label belongs to the region and the voxel is in-mask.
std::vector<std::uint8_t> region_binarize(const LabelVolume& lv, Region region, const BrainMask& mask);

struct RegionMetrics {
  double dice = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

// Counts over voxels where `mask` is set (all voxels when mask is empty).
RegionMetrics compute_metrics(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                              std::span<const std::uint8_t> mask = {});

struct MetricsReport {
  std::array<RegionMetrics, 3> regions{};

  const RegionMetrics& operator[](Region r) const { return regions[static_cast<std::size_t>(r)]; }
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

MetricsReport evaluate_segmentation(const LabelVolume& pred, const LabelVolume& truth,
                                    const BrainMask& mask, MetricsScope scope = MetricsScope::Mask);

}  // namespace wbseg
