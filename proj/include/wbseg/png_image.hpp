#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wbseg/volume.hpp"

namespace wbseg {

struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0, a = 0;
  bool operator==(const Rgba&) const = default;
};

// Overlay palette indexed by label code.
inline constexpr std::array<Rgba, kNumClasses> kOverlayPalette{{
    {0, 0, 0, 0},      // healthy: transparent
    {0, 255, 0, 255},  // edema: green
    {255, 255, 0, 255},  // non-enhancing: yellow
    {255, 0, 0, 255},  // enhancing: red
}};

// Min-max window over the slice; a constant slice maps to 0.
std::vector<std::uint8_t> window_to_gray(const SliceImage& img);

std::string encode_png_gray(const std::vector<std::uint8_t>& pixels, std::size_t width, std::size_t height);
std::string encode_png_rgba(const std::vector<Rgba>& pixels, std::size_t width, std::size_t height);

std::string slice_png(const MultiModalVolume& vol, Axis axis, std::size_t index, std::size_t modality);
std::string overlay_png(const LabelVolume& labels, Axis axis, std::size_t index);

struct DecodedPng {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;
};

DecodedPng decode_png(const std::string& bytes);

}  // namespace wbseg
