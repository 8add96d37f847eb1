#include "himforge/png_codec.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

namespace himforge {
namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

[[noreturn]] void on_png_error(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what != nullptr) *what = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void read_from_span(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + n > cur->bytes.size()) png_error(png, "unexpected end of PNG stream");
  std::memcpy(out, cur->bytes.data() + cur->pos, n);
  cur->pos += n;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void flush_noop(png_structp) {}

struct DecodeScratch {
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
};

// libpng reports errors via longjmp; no object with a non-trivial destructor
// may be created between setjmp and the last libpng call.
bool decode_into(std::span<const std::uint8_t> bytes, GrayPixels& px, std::string& err,
                 bool& unsupported) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (png == nullptr) {
    err = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  const auto scratch = std::make_unique<DecodeScratch>();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &cursor, read_from_span);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    err = "only single-channel grayscale PNG is supported";
    unsupported = true;
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  if (depth != 8 && depth != 16) {
    err = "only 8- or 16-bit PNG is supported";
    unsupported = true;
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    png_set_interlace_handling(png);
  }
  png_read_update_info(png, info);
  px.width = static_cast<int>(png_get_image_width(png, info));
  px.height = static_cast<int>(png_get_image_height(png, info));
  px.depth = depth;
  const std::size_t stride = png_get_rowbytes(png, info);
  px.values.assign(static_cast<std::size_t>(px.width) * px.height, 0);
  scratch->raw.assign(stride * px.height, 0);
  scratch->rows.resize(static_cast<std::size_t>(px.height));
  for (int y = 0; y < px.height; ++y) scratch->rows[y] = scratch->raw.data() + stride * y;
  png_read_image(png, scratch->rows.data());
  png_read_end(png, nullptr);
  for (int y = 0; y < px.height; ++y) {
    const std::uint8_t* r = scratch->rows[y];
    for (int x = 0; x < px.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * px.width + x;
      px.values[i] = depth == 16 ? static_cast<std::uint16_t>((r[2 * x] << 8) | r[2 * x + 1]) : r[x];
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

Bytes encode_raw(int width, int height, int depth, int color_type, int channels,
                 std::span<const std::uint8_t> packed) {
  Bytes out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (png == nullptr) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  const std::size_t stride = static_cast<std::size_t>(width) * channels * (depth / 8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(packed.data() + stride * y);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encode failed: " + err);
  }
  png_set_write_fn(png, &out, write_to_vector, flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

std::uint16_t quantize(double s, int depth) {
  const double levels = depth == 16 ? 65535.0 : 255.0;
  return static_cast<std::uint16_t>(std::round(s * levels));
}

GrayPixels decode_gray_pixels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw DecodeError("not a PNG stream");
  }
  GrayPixels px;
  std::string err;
  bool unsupported = false;
  if (!decode_into(bytes, px, err, unsupported)) {
    if (unsupported) throw UnsupportedFormat(err);
    throw DecodeError("malformed PNG: " + err);
  }
  return px;
}

Bytes encode_gray_pixels(const GrayPixels& px) {
  if (px.depth != 8 && px.depth != 16) throw InvalidArgument("PNG depth must be 8 or 16");
  if (px.width <= 0 || px.height <= 0) throw InvalidArgument("PNG dimensions must be positive");
  const int bpp = px.depth / 8;
  std::vector<std::uint8_t> packed(px.values.size() * bpp);
  for (std::size_t i = 0; i < px.values.size(); ++i) {
    if (bpp == 2) {
      packed[2 * i] = static_cast<std::uint8_t>(px.values[i] >> 8);
      packed[2 * i + 1] = static_cast<std::uint8_t>(px.values[i] & 0xff);
    } else {
      packed[i] = static_cast<std::uint8_t>(px.values[i]);
    }
  }
  return encode_raw(px.width, px.height, px.depth, PNG_COLOR_TYPE_GRAY, 1, packed);
}

GrayImage decode_image(std::span<const std::uint8_t> bytes) {
  const GrayPixels px = decode_gray_pixels(bytes);
  const double levels = px.depth == 16 ? 65535.0 : 255.0;
  std::vector<double> samples(px.values.size());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = px.values[i] / levels;
  return GrayImage(px.width, px.height, std::move(samples));
}

Bytes encode_image(const GrayImage& img, int depth) {
  if (depth != 8 && depth != 16) throw InvalidArgument("PNG depth must be 8 or 16");
  GrayPixels px{img.width(), img.height(), depth, std::vector<std::uint16_t>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) px.values[i] = quantize(img[i], depth);
  return encode_gray_pixels(px);
}

Bytes encode_mask(const BinaryMask& mask) {
  GrayPixels px{mask.width(), mask.height(), 8, std::vector<std::uint16_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) px.values[i] = mask[i] ? 255 : 0;
  return encode_gray_pixels(px);
}

BinaryMask decode_mask(std::span<const std::uint8_t> bytes) {
  const GrayPixels px = decode_gray_pixels(bytes);
  BinaryMask m(px.width, px.height);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = px.values[i] != 0 ? 1 : 0;
  return m;
}

Bytes encode_labels(const LabelMap& labels) {
  if (labels.count() > 65535) throw InvalidArgument("label count exceeds 16-bit PNG range");
  GrayPixels px{labels.width(), labels.height(), 16, std::vector<std::uint16_t>(labels.size())};
  for (std::size_t i = 0; i < labels.size(); ++i) px.values[i] = static_cast<std::uint16_t>(labels[i]);
  return encode_gray_pixels(px);
}

LabelMap decode_labels(std::span<const std::uint8_t> bytes) {
  const GrayPixels px = decode_gray_pixels(bytes);
  return LabelMap(px.width, px.height, std::vector<std::uint32_t>(px.values.begin(), px.values.end()));
}

Bytes encode_rgb(int width, int height, std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvalidArgument("RGB buffer size mismatch");
  }
  return encode_raw(width, height, 8, PNG_COLOR_TYPE_RGB, 3, rgb);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace himforge
