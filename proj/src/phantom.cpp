#include "wbseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "wbseg/error.hpp"

namespace wbseg {

using nlohmann::json;

bool Ellipsoid::contains(double i, double j, double k) const {
  const double a = (i - center[0]) / radii[0];
  const double b = (j - center[1]) / radii[1];
  const double c = (k - center[2]) / radii[2];
  return a * a + b * b + c * c <= 1.0;
}

namespace {

bool positive3(const std::array<double, 3>& r) {
  return std::all_of(r.begin(), r.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
}

bool strictly_inside(const std::array<double, 3>& inner, const std::array<double, 3>& outer) {
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(inner[a] < outer[a])) return false;
  }
  return true;
}

}  // namespace

void PhantomSpec::validate() const {
  if (dims.w < 8 || dims.h < 8 || dims.d < 8) {
    throw Error(ErrorCode::InvalidGeometry, "phantom needs at least 8 voxels per axis");
  }
  if (modalities.size() != 3) throw Error(ErrorCode::InvalidArgument, "phantom has exactly 3 modalities");
  for (const auto& row : means) {
    for (double m : row) {
      if (!std::isfinite(m) || m <= 0.0) throw Error(ErrorCode::InvalidArgument, "tissue means must be positive");
    }
  }
  if (!(intensity_range > 0.0)) throw Error(ErrorCode::InvalidArgument, "intensity_range must be > 0");
  if (!(noise_sigma >= 0.0) || !(partial_volume >= 0.0) || !(table_jitter >= 0.0) ||
      !(table_jitter < 1.0) || !(center_jitter >= 0.0) || !(radius_jitter >= 0.0) ||
      !(radius_jitter < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise and jitter parameters out of range");
  }
  if (!positive3(brain_radii) || !positive3(edema_radii) || !positive3(enhancing_radii) ||
      !positive3(core_radii) || !positive3(ventricle_radii)) {
    throw Error(ErrorCode::InvalidGeometry, "all radii must be positive");
  }
  for (double r : brain_radii) {
    if (r >= 0.5) throw Error(ErrorCode::InvalidGeometry, "brain must fit inside the volume");
  }
  if (!strictly_inside(core_radii, enhancing_radii) || !strictly_inside(enhancing_radii, edema_radii) ||
      !strictly_inside(edema_radii, brain_radii)) {
    throw Error(ErrorCode::InvalidGeometry, "tumour radii must be strictly nested: core < enhancing < edema < brain");
  }
  // Jittered radii must stay nested.
  for (std::size_t a = 0; a < 3; ++a) {
    if (core_radii[a] * (1 + radius_jitter) >= enhancing_radii[a] * (1 - radius_jitter) ||
        enhancing_radii[a] * (1 + radius_jitter) >= edema_radii[a] * (1 - radius_jitter)) {
      throw Error(ErrorCode::InvalidGeometry, "radius_jitter breaks the nesting of the tumour ellipsoids");
    }
  }
  if (!(cortex_thickness > 0.0) || !(cortex_thickness < 1.0)) {
    throw Error(ErrorCode::InvalidGeometry, "cortex_thickness must lie in (0, 1)");
  }
}

json PhantomSpec::to_json() const {
  json table = json::array();
  for (const auto& row : means) table.push_back(row);
  return {{"dims", {dims.w, dims.h, dims.d}},
          {"modalities", modalities},
          {"means", table},
          {"intensity_range", intensity_range},
          {"noise_sigma", noise_sigma},
          {"partial_volume", partial_volume},
          {"table_jitter", table_jitter},
          {"brain_radii", brain_radii},
          {"cortex_thickness", cortex_thickness},
          {"ventricle_radii", ventricle_radii},
          {"ventricle_offset", ventricle_offset},
          {"tumor_center", tumor_center},
          {"edema_radii", edema_radii},
          {"enhancing_radii", enhancing_radii},
          {"core_radii", core_radii},
          {"center_jitter", center_jitter},
          {"radius_jitter", radius_jitter}};
}

PhantomSpec PhantomSpec::from_json(const json& j) {
  PhantomSpec s;
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "phantom spec must be a JSON object");
  try {
    if (j.contains("dims")) {
      const auto d = j.at("dims").get<std::vector<std::size_t>>();
      if (d.size() != 3) throw Error(ErrorCode::InvalidGeometry, "dims needs three entries");
      s.dims = {d[0], d[1], d[2]};
    }
    if (j.contains("modalities")) s.modalities = j.at("modalities").get<std::vector<std::string>>();
    if (j.contains("means")) {
      const auto rows = j.at("means").get<std::vector<std::array<double, 3>>>();
      if (rows.size() != kPhantomTissues) {
        throw Error(ErrorCode::InvalidArgument, "means needs one row per phantom tissue (6)");
      }
      std::copy(rows.begin(), rows.end(), s.means.begin());
    }
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("intensity_range", s.intensity_range);
    get("noise_sigma", s.noise_sigma);
    get("partial_volume", s.partial_volume);
    get("table_jitter", s.table_jitter);
    get("brain_radii", s.brain_radii);
    get("cortex_thickness", s.cortex_thickness);
    get("ventricle_radii", s.ventricle_radii);
    get("ventricle_offset", s.ventricle_offset);
    get("tumor_center", s.tumor_center);
    get("edema_radii", s.edema_radii);
    get("enhancing_radii", s.enhancing_radii);
    get("core_radii", s.core_radii);
    get("center_jitter", s.center_jitter);
    get("radius_jitter", s.radius_jitter);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad phantom spec: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

// Normalised Gaussian smoothing restricted to `inside` voxels.
void masked_blur(std::vector<float>& channel, const std::vector<std::uint8_t>& inside, const Dims& dims,
                 double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int t = -radius; t <= radius; ++t) {
    kernel[static_cast<std::size_t>(t + radius)] = std::exp(-0.5 * t * t / (sigma * sigma));
  }
  std::vector<double> value(channel.begin(), channel.end());
  std::vector<double> weight(channel.size());
  for (std::size_t v = 0; v < channel.size(); ++v) {
    weight[v] = inside[v] ? 1.0 : 0.0;
    value[v] *= weight[v];
  }
  const std::array<std::size_t, 3> extent{dims.w, dims.h, dims.d};
  const std::array<std::size_t, 3> stride{1, dims.w, dims.w * dims.h};
  std::vector<double> tv(channel.size()), tw(channel.size());
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const auto n = static_cast<int>(extent[axis]);
    for (std::size_t v = 0; v < channel.size(); ++v) {
      const VoxelIndex p = dims.unravel(v);
      const int pos = static_cast<int>(axis == 0 ? p.i : axis == 1 ? p.j : p.k);
      double sv = 0.0, sw = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const int q = pos + t;
        if (q < 0 || q >= n) continue;
        const std::size_t u = v + static_cast<std::size_t>(static_cast<long>(t) * static_cast<long>(stride[axis]));
        const double g = kernel[static_cast<std::size_t>(t + radius)];
        sv += g * value[u];
        sw += g * weight[u];
      }
      tv[v] = sv;
      tw[v] = sw;
    }
    value.swap(tv);
    weight.swap(tw);
  }
  for (std::size_t v = 0; v < channel.size(); ++v) {
    channel[v] = inside[v] && weight[v] > 0.0 ? static_cast<float>(value[v] / weight[v]) : 0.0f;
  }
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Dims dims = spec.dims;
  const std::array<double, 3> ext{static_cast<double>(dims.w), static_cast<double>(dims.h),
                                  static_cast<double>(dims.d)};
  const std::array<double, 3> mid{(ext[0] - 1) / 2, (ext[1] - 1) / 2, (ext[2] - 1) / 2};

  auto means = spec.means;
  if (spec.table_jitter > 0.0) {
    for (auto& row : means) {
      for (double& m : row) m *= 1.0 + spec.table_jitter * unit(rng);
    }
  }

  Ellipsoid brain{mid, {}};
  Ellipsoid white{mid, {}};
  for (std::size_t a = 0; a < 3; ++a) {
    brain.radii[a] = spec.brain_radii[a] * ext[a];
    white.radii[a] = brain.radii[a] * (1.0 - spec.cortex_thickness);
  }
  std::array<Ellipsoid, 2> ventricles;
  for (int side = 0; side < 2; ++side) {
    auto& e = ventricles[static_cast<std::size_t>(side)];
    e.center = mid;
    e.center[0] += (side == 0 ? -1.0 : 1.0) * spec.ventricle_offset * ext[0];
    for (std::size_t a = 0; a < 3; ++a) e.radii[a] = spec.ventricle_radii[a] * ext[a];
  }

  std::array<double, 3> center{};
  for (std::size_t a = 0; a < 3; ++a) {
    center[a] = spec.tumor_center[a] * (ext[a] - 1) + spec.center_jitter * ext[a] * unit(rng);
  }
  std::array<Ellipsoid, 3> tumor;  // edema, enhancing, core
  const std::array<const std::array<double, 3>*, 3> radii{&spec.edema_radii, &spec.enhancing_radii,
                                                         &spec.core_radii};
  for (std::size_t t = 0; t < 3; ++t) {
    tumor[t].center = center;
    const double scale = 1.0 + spec.radius_jitter * unit(rng);
    for (std::size_t a = 0; a < 3; ++a) tumor[t].radii[a] = (*radii[t])[a] * ext[a] * scale;
  }

  Phantom out;
  out.tumor = tumor;
  out.tissue.assign(dims.voxels(), 255);
  std::vector<std::uint8_t> labels(dims.voxels(), 0);
  std::vector<std::uint8_t> inside(dims.voxels(), 0);
  for (std::size_t v = 0; v < dims.voxels(); ++v) {
    const VoxelIndex p = dims.unravel(v);
    const double i = static_cast<double>(p.i), j = static_cast<double>(p.j), k = static_cast<double>(p.k);
    if (!brain.contains(i, j, k)) continue;
    inside[v] = 1;
    PhantomTissue t = white.contains(i, j, k) ? PhantomTissue::WhiteMatter : PhantomTissue::GreyMatter;
    if (ventricles[0].contains(i, j, k) || ventricles[1].contains(i, j, k)) t = PhantomTissue::Csf;
    if (tumor[2].contains(i, j, k)) t = PhantomTissue::NonEnhancing;
    else if (tumor[1].contains(i, j, k)) t = PhantomTissue::Enhancing;
    else if (tumor[0].contains(i, j, k)) t = PhantomTissue::Edema;
    out.tissue[v] = static_cast<std::uint8_t>(t);
    switch (t) {
      case PhantomTissue::Edema: labels[v] = 1; break;
      case PhantomTissue::NonEnhancing: labels[v] = 2; break;
      case PhantomTissue::Enhancing: labels[v] = 3; break;
      default: break;
    }
  }

  std::vector<float> data(3 * dims.voxels(), 0.0f);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = spec.noise_sigma * spec.intensity_range;
  for (std::size_t m = 0; m < 3; ++m) {
    std::vector<float> channel(dims.voxels(), 0.0f);
    for (std::size_t v = 0; v < dims.voxels(); ++v) {
      if (inside[v]) channel[v] = static_cast<float>(means[out.tissue[v]][m]);
    }
    if (spec.partial_volume > 0.0) masked_blur(channel, inside, dims, spec.partial_volume);
    for (std::size_t v = 0; v < dims.voxels(); ++v) {
      if (!inside[v]) continue;
      const double x = channel[v] + sigma * normal(rng);
      // Brain voxels stay strictly positive so the mask is recoverable.
      channel[v] = static_cast<float>(std::max(x, 1.0));
    }
    std::copy(channel.begin(), channel.end(), data.begin() + static_cast<std::ptrdiff_t>(m * dims.voxels()));
  }

  out.volume = MultiModalVolume(dims, spec.modalities, std::move(data));
  out.truth = LabelVolume(dims, std::move(labels));
  out.brain = BrainMask(dims, std::move(inside));
  return out;
}

AxisPolicy axis_policy_from_string(std::string_view name) {
  if (name == "axial") return AxisPolicy::Axial;
  if (name == "sagittal") return AxisPolicy::Sagittal;
  if (name == "coronal") return AxisPolicy::Coronal;
  if (name == "mixed") return AxisPolicy::Mixed;
  throw Error(ErrorCode::InvalidArgument, "axis policy must be axial, sagittal, coronal or mixed");
}

std::string_view to_string(AxisPolicy policy) {
  switch (policy) {
    case AxisPolicy::Axial: return "axial";
    case AxisPolicy::Sagittal: return "sagittal";
    case AxisPolicy::Coronal: return "coronal";
    case AxisPolicy::Mixed: return "mixed";
  }
  return "?";
}

void StrokeBudget::validate() const {
  if (slices_per_class < 1) throw Error(ErrorCode::InvalidArgument, "slices_per_class must be >= 1");
  if (disks < 1 || healthy_disks < 1) throw Error(ErrorCode::InvalidArgument, "disk counts must be >= 1");
  if (!(radius >= 0.0) || !(healthy_radius >= 0.0) || !std::isfinite(radius) ||
      !std::isfinite(healthy_radius)) {
    throw Error(ErrorCode::InvalidArgument, "brush radii must be finite and >= 0");
  }
}

json StrokeBudget::to_json() const {
  return {{"slices_per_class", slices_per_class},
          {"radius", radius},
          {"healthy_radius", healthy_radius},
          {"disks", disks},
          {"healthy_disks", healthy_disks},
          {"axis", std::string(to_string(axis))}};
}

StrokeBudget StrokeBudget::from_json(const json& j) {
  StrokeBudget b;
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "stroke budget must be a JSON object");
  try {
    if (j.contains("slices_per_class")) b.slices_per_class = j.at("slices_per_class").get<std::size_t>();
    if (j.contains("radius")) b.radius = j.at("radius").get<double>();
    if (j.contains("healthy_radius")) b.healthy_radius = j.at("healthy_radius").get<double>();
    if (j.contains("disks")) b.disks = j.at("disks").get<std::size_t>();
    if (j.contains("healthy_disks")) b.healthy_disks = j.at("healthy_disks").get<std::size_t>();
    if (j.contains("axis")) b.axis = axis_policy_from_string(j.at("axis").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad stroke budget: ") + e.what());
  }
  b.validate();
  return b;
}

namespace {

Axis axis_for(AxisPolicy policy, std::size_t slice_number) {
  switch (policy) {
    case AxisPolicy::Axial: return Axis::Axial;
    case AxisPolicy::Sagittal: return Axis::Sagittal;
    case AxisPolicy::Coronal: return Axis::Coronal;
    case AxisPolicy::Mixed: {
      static constexpr std::array<Axis, 3> order{Axis::Axial, Axis::Coronal, Axis::Sagittal};
      return order[slice_number % 3];
    }
  }
  return Axis::Axial;
}

struct DiskOffset {
  int du, dv;
};

std::vector<DiskOffset> disk(double radius) {
  std::vector<DiskOffset> out;
  const int r = static_cast<int>(std::floor(radius));
  for (int dv = -r; dv <= r; ++dv) {
    for (int du = -r; du <= r; ++du) {
      if (du * du + dv * dv <= radius * radius) out.push_back({du, dv});
    }
  }
  return out;
}

}  // namespace

StrokeSet generate_strokes(const LabelVolume& truth, const BrainMask& mask, const StrokeBudget& budget,
                           std::uint64_t seed) {
  budget.validate();
  const Dims dims = truth.dims();
  if (mask.dims() != dims) throw Error(ErrorCode::DimsMismatch, "mask and label dims differ");
  std::array<std::size_t, kNumClasses> present{};
  for (std::size_t v = 0; v < dims.voxels(); ++v) {
    if (mask.contains(v)) ++present[class_index(truth.at(v))];
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (present[c] == 0) {
      throw Error(ErrorCode::ClassAbsent,
                  "class " + std::string(class_name(static_cast<TissueClass>(c))) + " absent from ground truth");
    }
  }

  std::mt19937_64 rng(seed);
  StrokeSet strokes;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<TissueClass>(c);
    const auto offsets = disk(cls == TissueClass::Healthy ? budget.healthy_radius : budget.radius);
    std::vector<std::size_t> used_slices[3];
    for (std::size_t s = 0; s < budget.slices_per_class; ++s) {
      const Axis axis = axis_for(budget.axis, s);
      const std::size_t extent = axis_extent(dims, axis);
      const auto [width, height] = slice_shape(dims, axis);
      auto in_class = [&](std::size_t index, std::size_t u, std::size_t v) {
        const std::size_t lin = dims.linear(slice_to_voxel(axis, index, u, v));
        return mask.contains(lin) && truth.at(lin) == cls;
      };

      // Healthy strokes go on slices through the tumour, as a user would
      // pick them; tumour classes use their own cross-section.
      auto counts = [&](std::size_t index, std::size_t u, std::size_t v) {
        const std::size_t lin = dims.linear(slice_to_voxel(axis, index, u, v));
        if (!mask.contains(lin)) return false;
        return cls == TissueClass::Healthy ? truth.at(lin) != TissueClass::Healthy : truth.at(lin) == cls;
      };
      std::vector<std::size_t> area(extent, 0);
      for (std::size_t index = 0; index < extent; ++index) {
        for (std::size_t v = 0; v < height; ++v) {
          for (std::size_t u = 0; u < width; ++u) area[index] += counts(index, u, v);
        }
      }
      const std::size_t max_area = *std::max_element(area.begin(), area.end());
      auto& used = used_slices[static_cast<std::size_t>(axis)];
      std::vector<std::size_t> candidates;
      for (std::size_t index = 0; index < extent; ++index) {
        if (area[index] > 0 && 2 * area[index] >= max_area &&
            std::find(used.begin(), used.end(), index) == used.end()) {
          candidates.push_back(index);
        }
      }
      if (candidates.empty()) {
        // Fewer qualifying slices than requested; reuse the widest ones.
        for (std::size_t index = 0; index < extent; ++index) {
          if (2 * area[index] >= max_area) candidates.push_back(index);
        }
      }
      const std::size_t slice =
          candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
      used.push_back(slice);

      // Disk coverage of the class region for every class pixel.
      std::vector<std::pair<std::size_t, std::size_t>> pixels;
      std::vector<std::size_t> score;
      for (std::size_t v = 0; v < height; ++v) {
        for (std::size_t u = 0; u < width; ++u) {
          if (!in_class(slice, u, v)) continue;
          std::size_t covered = 0;
          for (const auto& o : offsets) {
            const long uu = static_cast<long>(u) + o.du;
            const long vv = static_cast<long>(v) + o.dv;
            if (uu < 0 || vv < 0 || uu >= static_cast<long>(width) || vv >= static_cast<long>(height)) continue;
            covered += in_class(slice, static_cast<std::size_t>(uu), static_cast<std::size_t>(vv));
          }
          pixels.emplace_back(u, v);
          score.push_back(covered);
        }
      }
      const std::size_t best = *std::max_element(score.begin(), score.end());
      std::vector<std::size_t> good;
      for (std::size_t p = 0; p < pixels.size(); ++p) {
        if (static_cast<double>(score[p]) >= 0.9 * static_cast<double>(best)) good.push_back(p);
      }
      const std::size_t disks = cls == TissueClass::Healthy ? budget.healthy_disks : budget.disks;
      std::vector<std::pair<std::size_t, std::size_t>> centres;
      centres.push_back(pixels[good[std::uniform_int_distribution<std::size_t>(0, good.size() - 1)(rng)]]);
      while (centres.size() < disks) {
        // Farthest candidate from the placed centres (first one on ties).
        double far = -1.0;
        std::size_t pick = 0;
        for (std::size_t g = 0; g < pixels.size(); ++g) {
          double nearest = std::numeric_limits<double>::max();
          for (const auto& [u, v] : centres) {
            const double du = static_cast<double>(pixels[g].first) - static_cast<double>(u);
            const double dv = static_cast<double>(pixels[g].second) - static_cast<double>(v);
            nearest = std::min(nearest, du * du + dv * dv);
          }
          if (nearest > far) {
            far = nearest;
            pick = g;
          }
        }
        if (far <= 0.0) break;
        centres.push_back(pixels[pick]);
      }
      for (const auto& [cu, cv] : centres) {
        for (const auto& o : offsets) {
          const long uu = static_cast<long>(cu) + o.du;
          const long vv = static_cast<long>(cv) + o.dv;
          if (uu < 0 || vv < 0 || uu >= static_cast<long>(width) || vv >= static_cast<long>(height)) continue;
          if (!in_class(slice, static_cast<std::size_t>(uu), static_cast<std::size_t>(vv))) continue;
          strokes.add({slice_to_voxel(axis, slice, static_cast<std::size_t>(uu), static_cast<std::size_t>(vv)), cls});
        }
      }
    }
  }
  return strokes;
}

}  // namespace wbseg
