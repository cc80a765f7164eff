#include "wbseg/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "wbseg/error.hpp"

namespace wbseg {

namespace {

constexpr std::string_view kMagic = "MVOL1\n";
constexpr std::uint64_t kMaxHeaderBytes = 1u << 20;

void require_dims(const Dims& dims) {
  if (dims.w == 0 || dims.h == 0 || dims.d == 0) {
    throw Error(ErrorCode::InvalidArgument, "volume dimensions must be positive");
  }
}

void put_u64(std::string& out, std::uint64_t value) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((value >> (8 * b)) & 0xffu));
}

std::uint64_t get_u64(std::string_view bytes, std::size_t offset) {
  std::uint64_t value = 0;
  for (int b = 0; b < 8; ++b) {
    value |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
  }
  return value;
}

struct Header {
  Dims dims;
  std::vector<std::string> modalities;
  std::string dtype;
  Spacing spacing;
};

std::string encode_header(const Header& h) {
  nlohmann::json j;
  j["dims"] = {h.dims.w, h.dims.h, h.dims.d};
  j["modalities"] = h.modalities;
  j["dtype"] = h.dtype;
  j["spacing"] = {h.spacing.x, h.spacing.y, h.spacing.z};
  return j.dump();
}

std::string frame(const Header& h, std::size_t payload_bytes) {
  const std::string header = encode_header(h);
  std::string out;
  out.reserve(kMagic.size() + 8 + header.size() + payload_bytes);
  out.append(kMagic);
  put_u64(out, header.size());
  out.append(header);
  return out;
}

// Returns the header and the payload view.
std::pair<Header, std::string_view> unframe(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::MalformedHeader, "missing MVOL1 magic");
  }
  const std::uint64_t len = get_u64(bytes, kMagic.size());
  const std::size_t start = kMagic.size() + 8;
  if (len > kMaxHeaderBytes || len > bytes.size() - start) {
    throw Error(ErrorCode::MalformedHeader, "header length exceeds file size");
  }
  Header h;
  try {
    const auto j = nlohmann::json::parse(bytes.substr(start, len));
    const auto& dims = j.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw std::invalid_argument("dims");
    for (const auto& d : dims) {
      if (!d.is_number_unsigned()) throw std::invalid_argument("dims");
    }
    h.dims = {dims[0].get<std::size_t>(), dims[1].get<std::size_t>(), dims[2].get<std::size_t>()};
    h.modalities = j.at("modalities").get<std::vector<std::string>>();
    h.dtype = j.at("dtype").get<std::string>();
    const auto& sp = j.at("spacing");
    if (!sp.is_array() || sp.size() != 3) throw std::invalid_argument("spacing");
    h.spacing = {sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("invalid MVOL header: ") + e.what());
  }
  if (h.dims.w == 0 || h.dims.h == 0 || h.dims.d == 0) {
    throw Error(ErrorCode::MalformedHeader, "dims must be positive");
  }
  if (h.modalities.empty()) throw Error(ErrorCode::MalformedHeader, "no modalities");
  if (h.dtype != "f32" && h.dtype != "u8") {
    throw Error(ErrorCode::MalformedHeader, "unsupported dtype '" + h.dtype + "'");
  }
  if (!(h.spacing.x > 0 && h.spacing.y > 0 && h.spacing.z > 0)) {
    throw Error(ErrorCode::MalformedHeader, "spacing must be positive");
  }
  return {h, bytes.substr(start + len)};
}

}  // namespace

bool is_valid_class_code(int code) { return code >= 0 && code < static_cast<int>(kNumClasses); }

TissueClass class_from_code(int code) {
  if (!is_valid_class_code(code)) {
    throw Error(ErrorCode::InvalidArgument, "invalid tissue class code " + std::to_string(code));
  }
  return static_cast<TissueClass>(code);
}

std::string_view class_name(TissueClass c) {
  switch (c) {
    case TissueClass::Healthy: return "healthy";
    case TissueClass::Edema: return "edema";
    case TissueClass::NonEnhancing: return "non-enhancing";
    case TissueClass::Enhancing: return "enhancing";
  }
  return "?";
}

MultiModalVolume::MultiModalVolume(Dims dims, std::vector<std::string> modalities, Spacing spacing)
    : dims_(dims), modalities_(std::move(modalities)), spacing_(spacing) {
  require_dims(dims_);
  if (modalities_.empty()) throw Error(ErrorCode::InvalidArgument, "at least one modality required");
  data_.assign(modalities_.size() * dims_.voxels(), 0.0f);
}

MultiModalVolume::MultiModalVolume(Dims dims, std::vector<std::string> modalities,
                                   std::vector<float> data, Spacing spacing)
    : dims_(dims), modalities_(std::move(modalities)), data_(std::move(data)), spacing_(spacing) {
  require_dims(dims_);
  if (modalities_.empty()) throw Error(ErrorCode::InvalidArgument, "at least one modality required");
  if (data_.size() != modalities_.size() * dims_.voxels()) {
    throw Error(ErrorCode::PayloadSizeMismatch, "data length does not match M*W*H*D");
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite intensity");
  }
}

std::span<const float> MultiModalVolume::channel(std::size_t m) const {
  if (m >= modalities_.size()) throw Error(ErrorCode::IndexOutOfRange, "modality out of range");
  return std::span<const float>(data_).subspan(m * dims_.voxels(), dims_.voxels());
}

std::span<float> MultiModalVolume::mutable_channel(std::size_t m) {
  if (m >= modalities_.size()) throw Error(ErrorCode::IndexOutOfRange, "modality out of range");
  return std::span<float>(data_).subspan(m * dims_.voxels(), dims_.voxels());
}

LabelVolume::LabelVolume(Dims dims, Spacing spacing)
    : dims_(dims), labels_(dims.voxels(), 0), spacing_(spacing) {
  require_dims(dims_);
}

LabelVolume::LabelVolume(Dims dims, std::vector<std::uint8_t> labels, Spacing spacing)
    : dims_(dims), labels_(std::move(labels)), spacing_(spacing) {
  require_dims(dims_);
  if (labels_.size() != dims_.voxels()) {
    throw Error(ErrorCode::PayloadSizeMismatch, "label count does not match W*H*D");
  }
  for (auto code : labels_) {
    if (!is_valid_class_code(code)) {
      throw Error(ErrorCode::InvalidArgument, "label code outside {0,1,2,3}");
    }
  }
}

BrainMask::BrainMask(Dims dims, std::vector<std::uint8_t> inside)
    : dims_(dims), inside_(std::move(inside)) {
  if (inside_.size() != dims_.voxels()) {
    throw Error(ErrorCode::DimsMismatch, "mask size does not match dims");
  }
  for (auto& b : inside_) b = b ? 1 : 0;
  count_ = static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), 1));
}

BrainMask BrainMask::full(Dims dims) { return BrainMask(dims, std::vector<std::uint8_t>(dims.voxels(), 1)); }

BrainMask compute_brain_mask(const MultiModalVolume& vol, double threshold) {
  const std::size_t n = vol.dims().voxels();
  std::vector<std::uint8_t> inside(n, 0);
  for (std::size_t m = 0; m < vol.modality_count(); ++m) {
    const auto ch = vol.channel(m);
    for (std::size_t v = 0; v < n; ++v) {
      if (ch[v] > threshold) inside[v] = 1;
    }
  }
  return BrainMask(vol.dims(), std::move(inside));
}

Axis axis_from_string(std::string_view name) {
  if (name == "axial") return Axis::Axial;
  if (name == "sagittal") return Axis::Sagittal;
  if (name == "coronal") return Axis::Coronal;
  throw Error(ErrorCode::InvalidArgument, "unknown axis '" + std::string(name) + "'");
}

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::Axial: return "axial";
    case Axis::Sagittal: return "sagittal";
    case Axis::Coronal: return "coronal";
  }
  return "?";
}

std::size_t axis_extent(const Dims& dims, Axis axis) {
  switch (axis) {
    case Axis::Axial: return dims.d;
    case Axis::Sagittal: return dims.w;
    case Axis::Coronal: return dims.h;
  }
  return 0;
}

std::pair<std::size_t, std::size_t> slice_shape(const Dims& dims, Axis axis) {
  switch (axis) {
    case Axis::Axial: return {dims.w, dims.h};
    case Axis::Sagittal: return {dims.h, dims.d};
    case Axis::Coronal: return {dims.w, dims.d};
  }
  return {0, 0};
}

VoxelIndex slice_to_voxel(Axis axis, std::size_t index, std::size_t u, std::size_t v) {
  switch (axis) {
    case Axis::Axial: return {u, v, index};
    case Axis::Sagittal: return {index, u, v};
    case Axis::Coronal: return {u, index, v};
  }
  return {};
}

namespace {

template <typename Fetch>
SliceImage build_slice(const Dims& dims, Axis axis, std::size_t index, Fetch fetch) {
  if (index >= axis_extent(dims, axis)) {
    throw Error(ErrorCode::IndexOutOfRange,
                "slice index " + std::to_string(index) + " outside " + std::string(to_string(axis)) +
                    " extent " + std::to_string(axis_extent(dims, axis)));
  }
  const auto [width, height] = slice_shape(dims, axis);
  SliceImage img{width, height, std::vector<float>(width * height)};
  for (std::size_t v = 0; v < height; ++v) {
    for (std::size_t u = 0; u < width; ++u) {
      img.pixels[v * width + u] = fetch(dims.linear(slice_to_voxel(axis, index, u, v)));
    }
  }
  return img;
}

}  // namespace

SliceImage extract_slice(const MultiModalVolume& vol, Axis axis, std::size_t index,
                         std::size_t modality) {
  const auto ch = vol.channel(modality);
  return build_slice(vol.dims(), axis, index, [&](std::size_t lin) { return ch[lin]; });
}

SliceImage extract_label_slice(const LabelVolume& labels, Axis axis, std::size_t index) {
  const auto data = labels.data();
  return build_slice(labels.dims(), axis, index,
                     [&](std::size_t lin) { return static_cast<float>(data[lin]); });
}

std::string serialize_volume(const MultiModalVolume& vol) {
  const auto data = vol.data();
  std::string out = frame({vol.dims(), vol.modalities(), "f32", vol.spacing()}, data.size() * 4);
  for (float f : data) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
  }
  return out;
}

std::string serialize_labels(const LabelVolume& labels) {
  const auto data = labels.data();
  std::string out = frame({labels.dims(), {"labels"}, "u8", labels.spacing()}, data.size());
  out.append(reinterpret_cast<const char*>(data.data()), data.size());
  return out;
}

MultiModalVolume parse_volume(std::string_view bytes) {
  auto [h, payload] = unframe(bytes);
  if (h.dtype != "f32") throw Error(ErrorCode::MalformedHeader, "expected dtype f32");
  const std::size_t count = h.modalities.size() * h.dims.voxels();
  if (payload.size() != count * 4) {
    throw Error(ErrorCode::PayloadSizeMismatch,
                "payload has " + std::to_string(payload.size()) + " bytes, expected " +
                    std::to_string(count * 4));
  }
  std::vector<float> data(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * n + b])) << (8 * b);
    }
    data[n] = std::bit_cast<float>(bits);
  }
  return MultiModalVolume(h.dims, std::move(h.modalities), std::move(data), h.spacing);
}

LabelVolume parse_labels(std::string_view bytes) {
  auto [h, payload] = unframe(bytes);
  if (h.dtype != "u8" || h.modalities.size() != 1) {
    throw Error(ErrorCode::MalformedHeader, "label volume must be dtype u8 with one channel");
  }
  if (payload.size() != h.dims.voxels()) {
    throw Error(ErrorCode::PayloadSizeMismatch,
                "payload has " + std::to_string(payload.size()) + " bytes, expected " +
                    std::to_string(h.dims.voxels()));
  }
  std::vector<std::uint8_t> labels(payload.begin(), payload.end());
  return LabelVolume(h.dims, std::move(labels), h.spacing);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

MultiModalVolume load_volume(const std::filesystem::path& path) { return parse_volume(read_file(path)); }
LabelVolume load_labels(const std::filesystem::path& path) { return parse_labels(read_file(path)); }

void save_volume(const MultiModalVolume& vol, const std::filesystem::path& path) {
  write_file(path, serialize_volume(vol));
}

void save_labels(const LabelVolume& labels, const std::filesystem::path& path) {
  write_file(path, serialize_labels(labels));
}

}  // namespace wbseg
