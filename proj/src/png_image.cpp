#include "wbseg/png_image.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

#include "wbseg/error.hpp"

namespace wbseg {

std::vector<std::uint8_t> window_to_gray(const SliceImage& img) {
  std::vector<std::uint8_t> out(img.pixels.size(), 0);
  if (img.pixels.empty()) return out;
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double span = static_cast<double>(*hi) - static_cast<double>(*lo);
  if (!(span > 0.0)) return out;
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double t = (static_cast<double>(img.pixels[p]) - *lo) / span;
    out[p] = static_cast<std::uint8_t>(std::clamp(t * 255.0 + 0.5, 0.0, 255.0));
  }
  return out;
}

namespace {

std::string encode(const std::uint8_t* data, std::size_t width, std::size_t height, png_uint_32 format) {
  if (width == 0 || height == 0) throw Error(ErrorCode::InvalidArgument, "empty image");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, std::string("png encode: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

std::string encode_png_gray(const std::vector<std::uint8_t>& pixels, std::size_t width, std::size_t height) {
  if (pixels.size() != width * height) throw Error(ErrorCode::InvalidArgument, "pixel count mismatch");
  return encode(pixels.data(), width, height, PNG_FORMAT_GRAY);
}

std::string encode_png_rgba(const std::vector<Rgba>& pixels, std::size_t width, std::size_t height) {
  if (pixels.size() != width * height) throw Error(ErrorCode::InvalidArgument, "pixel count mismatch");
  std::vector<std::uint8_t> raw(pixels.size() * 4);
  for (std::size_t p = 0; p < pixels.size(); ++p) {
    raw[4 * p] = pixels[p].r;
    raw[4 * p + 1] = pixels[p].g;
    raw[4 * p + 2] = pixels[p].b;
    raw[4 * p + 3] = pixels[p].a;
  }
  return encode(raw.data(), width, height, PNG_FORMAT_RGBA);
}

std::string slice_png(const MultiModalVolume& vol, Axis axis, std::size_t index, std::size_t modality) {
  if (modality >= vol.modality_count()) {
    throw Error(ErrorCode::IndexOutOfRange, "modality " + std::to_string(modality) + " out of range");
  }
  const SliceImage img = extract_slice(vol, axis, index, modality);
  return encode_png_gray(window_to_gray(img), img.width, img.height);
}

std::string overlay_png(const LabelVolume& labels, Axis axis, std::size_t index) {
  const SliceImage img = extract_label_slice(labels, axis, index);
  std::vector<Rgba> px(img.pixels.size());
  for (std::size_t p = 0; p < px.size(); ++p) {
    px[p] = kOverlayPalette[static_cast<std::size_t>(img.pixels[p])];
  }
  return encode_png_rgba(px, img.width, img.height);
}

DecodedPng decode_png(const std::string& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::IoFailure, std::string("png decode: ") + image.message);
  }
  DecodedPng out;
  const bool has_alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const bool has_color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = has_color ? (has_alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                           : (has_alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  out.width = image.width;
  out.height = image.height;
  out.channels = PNG_IMAGE_PIXEL_CHANNELS(image.format);
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::IoFailure, std::string("png decode: ") + image.message);
  }
  return out;
}

}  // namespace wbseg
