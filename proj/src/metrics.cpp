#include "wbseg/metrics.hpp"

#include "wbseg/error.hpp"

namespace wbseg {

using nlohmann::json;

std::string_view to_string(Region region) {
  switch (region) {
    case Region::Complete: return "complete";
    case Region::Core: return "core";
    case Region::Enhancing: return "enhancing";
  }
  return "?";
}

bool region_contains(Region region, TissueClass c) {
  switch (region) {
    case Region::Complete: return c != TissueClass::Healthy;
    case Region::Core: return c == TissueClass::NonEnhancing || c == TissueClass::Enhancing;
    case Region::Enhancing: return c == TissueClass::Enhancing;
  }
  return false;
}

MetricsScope scope_from_string(std::string_view name) {
  if (name == "mask") return MetricsScope::Mask;
  if (name == "full") return MetricsScope::Full;
  throw Error(ErrorCode::InvalidArgument, "metrics scope must be 'mask' or 'full'");
}

std::string_view to_string(MetricsScope scope) {
  return scope == MetricsScope::Mask ? "mask" : "full";
}

std::vector<std::uint8_t> region_binarize(const LabelVolume& lv, Region region, const BrainMask& mask) {
  if (lv.dims() != mask.dims()) throw Error(ErrorCode::DimsMismatch, "label and mask dims differ");
  std::vector<std::uint8_t> out(lv.dims().voxels(), 0);
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v] = mask.contains(v) && region_contains(region, lv.at(v)) ? 1 : 0;
  }
  return out;
}

RegionMetrics compute_metrics(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth,
                              std::span<const std::uint8_t> mask) {
  if (pred.size() != truth.size() || (!mask.empty() && mask.size() != pred.size())) {
    throw Error(ErrorCode::DimsMismatch, "metric inputs differ in size");
  }
  std::size_t p1 = 0, t1 = 0, both1 = 0, p0 = 0, t0 = 0, both0 = 0;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    if (!mask.empty() && mask[v] == 0) continue;
    const bool p = pred[v] != 0;
    const bool t = truth[v] != 0;
    p1 += p;
    t1 += t;
    both1 += p && t;
    p0 += !p;
    t0 += !t;
    both0 += !p && !t;
  }
  auto ratio = [](double num, double den, bool other_empty) {
    if (den == 0.0) return other_empty ? 1.0 : 0.0;
    return num / den;
  };
  RegionMetrics m;
  m.dice = ratio(2.0 * static_cast<double>(both1), static_cast<double>(p1 + t1), true);
  m.sensitivity = ratio(static_cast<double>(both1), static_cast<double>(t1), p1 == 0);
  m.specificity = ratio(static_cast<double>(both0), static_cast<double>(t0), p0 == 0);
  return m;
}

json MetricsReport::to_json() const {
  json j = json::object();
  for (Region r : kRegions) {
    const auto& m = (*this)[r];
    j[std::string(to_string(r))] = {
        {"dice", m.dice}, {"sensitivity", m.sensitivity}, {"specificity", m.specificity}};
  }
  return j;
}

MetricsReport MetricsReport::from_json(const json& j) {
  MetricsReport rep;
  try {
    for (Region r : kRegions) {
      const auto& o = j.at(std::string(to_string(r)));
      auto& m = rep.regions[static_cast<std::size_t>(r)];
      m.dice = o.at("dice").get<double>();
      m.sensitivity = o.at("sensitivity").get<double>();
      m.specificity = o.at("specificity").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad metrics report: ") + e.what());
  }
  return rep;
}

MetricsReport evaluate_segmentation(const LabelVolume& pred, const LabelVolume& truth,
                                    const BrainMask& mask, MetricsScope scope) {
  if (pred.dims() != truth.dims() || pred.dims() != mask.dims()) {
    throw Error(ErrorCode::DimsMismatch, "prediction, truth and mask dims differ");
  }
  const BrainMask region_mask = scope == MetricsScope::Mask ? mask : BrainMask::full(mask.dims());
  MetricsReport rep;
  for (Region r : kRegions) {
    const auto p = region_binarize(pred, r, region_mask);
    const auto t = region_binarize(truth, r, region_mask);
    rep.regions[static_cast<std::size_t>(r)] = compute_metrics(p, t, region_mask.data());
  }
  return rep;
}

}  // namespace wbseg
