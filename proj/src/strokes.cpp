#include "wbseg/strokes.hpp"

#include "json.hpp"
#include "wbseg/error.hpp"

namespace wbseg {

std::uint64_t StrokeSet::key(const VoxelIndex& v) {
  return (static_cast<std::uint64_t>(v.k) << 42) | (static_cast<std::uint64_t>(v.j) << 21) |
         static_cast<std::uint64_t>(v.i);
}

StrokeSet StrokeSet::from_entries(const std::vector<Stroke>& entries) {
  StrokeSet s;
  for (const auto& e : entries) s.add(e);
  return s;
}

bool StrokeSet::add(const Stroke& s) {
  constexpr std::size_t kLimit = std::size_t{1} << 21;
  if (s.voxel.i >= kLimit || s.voxel.j >= kLimit || s.voxel.k >= kLimit) {
    throw Error(ErrorCode::IndexOutOfRange, "stroke coordinate too large");
  }
  const auto [it, inserted] = index_.emplace(key(s.voxel), s.label);
  if (!inserted) {
    if (it->second != s.label) {
      throw Error(ErrorCode::ConflictingLabels,
                  "voxel (" + std::to_string(s.voxel.i) + "," + std::to_string(s.voxel.j) + "," +
                      std::to_string(s.voxel.k) + ") labelled both " +
                      std::string(class_name(it->second)) + " and " +
                      std::string(class_name(s.label)));
    }
    return false;
  }
  entries_.push_back(s);
  return true;
}

void StrokeSet::merge(const StrokeSet& other) {
  // Validate first so a conflicting delta leaves this set untouched.
  for (const auto& e : other.entries_) {
    const auto it = index_.find(key(e.voxel));
    if (it != index_.end() && it->second != e.label) {
      throw Error(ErrorCode::ConflictingLabels, "stroke delta conflicts with existing labels");
    }
  }
  for (const auto& e : other.entries_) add(e);
}

void StrokeSet::clear() {
  entries_.clear();
  index_.clear();
}

std::optional<TissueClass> StrokeSet::label_at(const VoxelIndex& v) const {
  const auto it = index_.find(key(v));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::array<std::size_t, kNumClasses> StrokeSet::class_counts() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& e : entries_) ++counts[class_index(e.label)];
  return counts;
}

void StrokeSet::check_bounds(const Dims& dims) const {
  for (const auto& e : entries_) {
    if (!dims.contains(e.voxel)) {
      throw Error(ErrorCode::IndexOutOfRange, "stroke voxel outside volume bounds");
    }
  }
}

StrokeSet parse_strokes_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("strokes JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("version", 0) != 1 || !j.contains("strokes") ||
      !j["strokes"].is_array()) {
    throw Error(ErrorCode::InvalidArgument, "strokes JSON must have version 1 and a strokes array");
  }
  StrokeSet set;
  for (const auto& s : j["strokes"]) {
    try {
      const auto i = s.at("i").get<std::int64_t>();
      const auto jj = s.at("j").get<std::int64_t>();
      const auto k = s.at("k").get<std::int64_t>();
      const auto label = s.at("label").get<int>();
      if (i < 0 || jj < 0 || k < 0) throw std::invalid_argument("negative coordinate");
      set.add({{static_cast<std::size_t>(i), static_cast<std::size_t>(jj),
                static_cast<std::size_t>(k)},
               class_from_code(label)});
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("malformed stroke entry: ") + e.what());
    }
  }
  return set;
}

std::string strokes_to_json(const StrokeSet& strokes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : strokes.entries()) {
    arr.push_back({{"i", e.voxel.i}, {"j", e.voxel.j}, {"k", e.voxel.k},
                   {"label", static_cast<int>(e.label)}});
  }
  return nlohmann::json{{"version", 1}, {"strokes", std::move(arr)}}.dump();
}

StrokeSet load_strokes(const std::filesystem::path& path) { return parse_strokes_json(read_file(path)); }

void save_strokes(const StrokeSet& strokes, const std::filesystem::path& path) {
  write_file(path, strokes_to_json(strokes));
}

}  // namespace wbseg
