#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "himforge/core.hpp"

namespace himforge {

class DecodeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

using Bytes = std::vector<std::uint8_t>;

/// Raw single-channel PNG payload before normalization.
struct GrayPixels {
  int width = 0;
  int height = 0;
  int depth = 0;  // 8 or 16
  std::vector<std::uint16_t> values;
};

/// Quantizes s to round(s * (2^depth - 1)), halves rounded away from zero.
std::uint16_t quantize(double s, int depth);

GrayPixels decode_gray_pixels(std::span<const std::uint8_t> bytes);
Bytes encode_gray_pixels(const GrayPixels& px);

GrayImage decode_image(std::span<const std::uint8_t> bytes);
Bytes encode_image(const GrayImage& img, int depth);

/// 8-bit {0,255}.
Bytes encode_mask(const BinaryMask& mask);
/// Any non-zero stored value is particle.
BinaryMask decode_mask(std::span<const std::uint8_t> bytes);

/// 16-bit raw ids; throws if count > 65535.
Bytes encode_labels(const LabelMap& labels);
LabelMap decode_labels(std::span<const std::uint8_t> bytes);

/// 8-bit RGB, used only for visual overlays.
Bytes encode_rgb(int width, int height, std::span<const std::uint8_t> rgb);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline GrayImage read_image(const std::filesystem::path& p) { return decode_image(read_file(p)); }
inline void write_image(const std::filesystem::path& p, const GrayImage& img, int depth = 16) {
  write_file(p, encode_image(img, depth));
}

}  // namespace himforge
