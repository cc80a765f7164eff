#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wbseg/volume.hpp"

namespace wbseg {

struct Stroke {
  VoxelIndex voxel;
  TissueClass label = TissueClass::Healthy;

  bool operator==(const Stroke&) const = default;
};

/// User-labelled voxels in insertion order. Re-adding a voxel with the same
/// label is a no-op; a different label raises ConflictingLabels.
class StrokeSet {
 public:
  StrokeSet() = default;

  static StrokeSet from_entries(const std::vector<Stroke>& entries);

  // Returns true when the entry was new.
  bool add(const Stroke& s);
  void merge(const StrokeSet& other);
  void clear();

  const std::vector<Stroke>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::optional<TissueClass> label_at(const VoxelIndex& v) const;
  std::array<std::size_t, kNumClasses> class_counts() const;

  // Fails with IndexOutOfRange when any voxel is outside `dims`.
  void check_bounds(const Dims& dims) const;

  bool operator==(const StrokeSet& o) const { return entries_ == o.entries_; }

 private:
  static std::uint64_t key(const VoxelIndex& v);

  std::vector<Stroke> entries_;
  std::unordered_map<std::uint64_t, TissueClass> index_;
};

// {"version":1, "strokes":[{"i":..,"j":..,"k":..,"label":0..3}, ...]}
StrokeSet parse_strokes_json(const std::string& text);
std::string strokes_to_json(const StrokeSet& strokes);
StrokeSet load_strokes(const std::filesystem::path& path);
void save_strokes(const StrokeSet& strokes, const std::filesystem::path& path);

}  // namespace wbseg
