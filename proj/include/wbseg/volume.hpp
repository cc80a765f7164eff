#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wbseg {

struct VoxelIndex {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;

  auto operator<=>(const VoxelIndex&) const = default;
};

struct Dims {
  std::size_t w = 0;
  std::size_t h = 0;
  std::size_t d = 0;

  std::size_t voxels() const { return w * h * d; }
  bool contains(const VoxelIndex& v) const { return v.i < w && v.j < h && v.k < d; }
  std::size_t linear(const VoxelIndex& v) const { return (v.k * h + v.j) * w + v.i; }
  VoxelIndex unravel(std::size_t linear) const {
    return {linear % w, (linear / w) % h, linear / (w * h)};
  }

  bool operator==(const Dims&) const = default;
};

struct Spacing {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;

  bool operator==(const Spacing&) const = default;
};

enum class TissueClass : std::uint8_t {
  Healthy = 0,
  Edema = 1,
  NonEnhancing = 2,  // includes necrosis
  Enhancing = 3,
};

inline constexpr std::size_t kNumClasses = 4;

inline std::size_t class_index(TissueClass c) { return static_cast<std::size_t>(c); }
bool is_valid_class_code(int code);
TissueClass class_from_code(int code);
std::string_view class_name(TissueClass c);

/// Dense multi-modal intensity grid. Linear layout is modality-major with i
/// fastest: ((m*D + k)*H + j)*W + i. Immutable once built, apart from the
/// explicit mutable accessor used by generators.
class MultiModalVolume {
 public:
  MultiModalVolume() = default;
  MultiModalVolume(Dims dims, std::vector<std::string> modalities, Spacing spacing = {});
  MultiModalVolume(Dims dims, std::vector<std::string> modalities, std::vector<float> data,
                   Spacing spacing = {});

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const std::vector<std::string>& modalities() const { return modalities_; }
  std::size_t modality_count() const { return modalities_.size(); }

  std::span<const float> data() const { return data_; }
  std::span<const float> channel(std::size_t m) const;
  std::span<float> mutable_channel(std::size_t m);

  float at(std::size_t m, const VoxelIndex& v) const {
    return data_[m * dims_.voxels() + dims_.linear(v)];
  }

  bool operator==(const MultiModalVolume&) const = default;

 private:
  Dims dims_;
  std::vector<std::string> modalities_;
  std::vector<float> data_;
  Spacing spacing_;
};

class LabelVolume {
 public:
  LabelVolume() = default;
  explicit LabelVolume(Dims dims, Spacing spacing = {});
  LabelVolume(Dims dims, std::vector<std::uint8_t> labels, Spacing spacing = {});

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::span<const std::uint8_t> data() const { return labels_; }

  TissueClass at(const VoxelIndex& v) const {
    return static_cast<TissueClass>(labels_[dims_.linear(v)]);
  }
  TissueClass at(std::size_t linear) const { return static_cast<TissueClass>(labels_[linear]); }
  void set(std::size_t linear, TissueClass c) { labels_[linear] = static_cast<std::uint8_t>(c); }
  void set(const VoxelIndex& v, TissueClass c) { set(dims_.linear(v), c); }

  bool operator==(const LabelVolume&) const = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> labels_;
  Spacing spacing_;
};

class BrainMask {
 public:
  BrainMask() = default;
  BrainMask(Dims dims, std::vector<std::uint8_t> inside);

  const Dims& dims() const { return dims_; }
  std::size_t count() const { return count_; }
  bool contains(std::size_t linear) const { return inside_[linear] != 0; }
  bool contains(const VoxelIndex& v) const { return contains(dims_.linear(v)); }
  std::span<const std::uint8_t> data() const { return inside_; }

  static BrainMask full(Dims dims);

 private:
  Dims dims_;
  std::vector<std::uint8_t> inside_;
  std::size_t count_ = 0;
};

/// Inside iff the maximum intensity over modalities exceeds `threshold`.
BrainMask compute_brain_mask(const MultiModalVolume& vol, double threshold = 0.0);

enum class Axis { Axial, Sagittal, Coronal };

Axis axis_from_string(std::string_view name);
std::string_view to_string(Axis axis);
std::size_t axis_extent(const Dims& dims, Axis axis);

// Plane coordinates: axial (i, j) at fixed k; sagittal (j, k) at fixed i;
// coronal (i, k) at fixed j. `u` is the column, `v` the row.
VoxelIndex slice_to_voxel(Axis axis, std::size_t index, std::size_t u, std::size_t v);
std::pair<std::size_t, std::size_t> slice_shape(const Dims& dims, Axis axis);

struct SliceImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;  // row-major, pixels[v * width + u]

  float at(std::size_t u, std::size_t v) const { return pixels[v * width + u]; }
};

SliceImage extract_slice(const MultiModalVolume& vol, Axis axis, std::size_t index,
                         std::size_t modality);
SliceImage extract_label_slice(const LabelVolume& labels, Axis axis, std::size_t index);

// MVOL container: "MVOL1\n", u64 LE header length, JSON header, LE payload.
MultiModalVolume load_volume(const std::filesystem::path& path);
MultiModalVolume parse_volume(std::string_view bytes);
LabelVolume load_labels(const std::filesystem::path& path);
LabelVolume parse_labels(std::string_view bytes);

std::string serialize_volume(const MultiModalVolume& vol);
std::string serialize_labels(const LabelVolume& labels);
void save_volume(const MultiModalVolume& vol, const std::filesystem::path& path);
void save_labels(const LabelVolume& labels, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace wbseg
