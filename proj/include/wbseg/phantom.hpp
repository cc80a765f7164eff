#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "wbseg/strokes.hpp"
#include "wbseg/volume.hpp"

namespace wbseg {

// Tissue rows of the intensity table. The first three are healthy
// sub-tissues and all carry label 0.
enum class PhantomTissue : std::size_t { WhiteMatter, GreyMatter, Csf, Edema, NonEnhancing, Enhancing };
inline constexpr std::size_t kPhantomTissues = 6;

struct Ellipsoid {
  std::array<double, 3> center{};  // voxel coordinates (i, j, k)
  std::array<double, 3> radii{};

  bool contains(double i, double j, double k) const;
};

/// Geometry is given as fractions of the volume extent so the same spec
/// scales to any grid size.
struct PhantomSpec {
  Dims dims{96, 96, 96};
  std::vector<std::string> modalities{"t1c", "t2", "flair"};
  // means[tissue][modality] on a 0..intensity_range scale.
  std::array<std::array<double, 3>, kPhantomTissues> means{{
      {460, 440, 450},  // white matter
      {475, 505, 525},  // grey matter
      {382, 652, 438},  // csf
      {490, 570, 600},  // edema
      {415, 630, 475},  // non-enhancing core
      {640, 530, 550},  // enhancing rim
  }};
  double intensity_range = 1000.0;
  double noise_sigma = 0.02;        // fraction of intensity_range
  double partial_volume = 0.8;      // Gaussian blur sigma in voxels, 0 disables
  double table_jitter = 0.0;        // per-seed relative jitter of every mean
  std::array<double, 3> brain_radii{0.42, 0.46, 0.40};
  double cortex_thickness = 0.12;   // fraction of the brain radii that is grey matter
  std::array<double, 3> ventricle_radii{0.05, 0.12, 0.07};
  double ventricle_offset = 0.07;   // lateral offset of each ventricle from the midline
  std::array<double, 3> tumor_center{0.64, 0.44, 0.55};
  std::array<double, 3> edema_radii{0.17, 0.15, 0.14};
  std::array<double, 3> enhancing_radii{0.10, 0.09, 0.085};
  std::array<double, 3> core_radii{0.06, 0.055, 0.05};
  double center_jitter = 0.04;      // fraction of the extent, uniform per axis
  double radius_jitter = 0.10;      // relative, uniform per tumor ellipsoid

  void validate() const;
  nlohmann::json to_json() const;
  static PhantomSpec from_json(const nlohmann::json& j);
};

struct Phantom {
  MultiModalVolume volume;
  LabelVolume truth;
  BrainMask brain;  // the brain ellipsoid (equals compute_brain_mask of volume)
  std::vector<std::uint8_t> tissue;  // PhantomTissue per voxel, 255 outside the brain
  std::array<Ellipsoid, 3> tumor;    // edema, enhancing, core
};

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

enum class AxisPolicy { Axial, Sagittal, Coronal, Mixed };

AxisPolicy axis_policy_from_string(std::string_view name);
std::string_view to_string(AxisPolicy policy);

struct StrokeBudget {
  std::size_t slices_per_class = 2;
  double radius = 2.0;          // brush radius for tumour classes (voxels)
  double healthy_radius = 6.0;  // brush radius for healthy tissue
  std::size_t disks = 3;          // disks per tumour slice, spread apart
  std::size_t healthy_disks = 6;  // disks per healthy slice, spread apart
  AxisPolicy axis = AxisPolicy::Mixed;

  void validate() const;
  nlohmann::json to_json() const;
  static StrokeBudget from_json(const nlohmann::json& j);
};

// `disks` disks per chosen slice and tumour class (healthy_disks for healthy),
// clipped to that class's in-mask region. Slices are drawn among those where
// the class covers at least half of its largest cross-section; the first
// disk centre among pixels whose disk coverage is within 90% of the best,
// further centres at the class pixels farthest from the ones already placed.
StrokeSet generate_strokes(const LabelVolume& truth, const BrainMask& mask,
                           const StrokeBudget& budget, std::uint64_t seed);

}  // namespace wbseg
