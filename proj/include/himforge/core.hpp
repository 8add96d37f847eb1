#pragma once

// Raster value types shared by every stage of the synthesis and metrology pipeline.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace himforge {

/// Base class for all recoverable library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Dense row-major 2-D array. Equality is element-wise; copies never alias.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(checked_dim(width)), height_(checked_dim(height)),
        data_(static_cast<std::size_t>(width) * height, fill) {}
  Grid(int width, int height, std::vector<T> data)
      : width_(checked_dim(width)), height_(checked_dim(height)), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(width) * height) {
      throw InvalidArgument("grid data length does not match width*height");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> values() & { return data_; }
  std::span<const T> values() const& { return data_; }
  // a span into a temporary would dangle
  std::span<const T> values() const&& = delete;
  std::vector<T>&& release() && { return std::move(data_); }

  bool same_shape(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U>
  bool same_shape(const Grid<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static int checked_dim(int d) {
    if (d < 0) throw InvalidArgument("negative raster dimension");
    return d;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Unbounded scalar raster (logits, distance maps, height fields).
using ScalarField = Grid<double>;

/// Grayscale raster with every sample in [0,1].
///
/// The invariant is checked on construction; use `GrayImage::clamped` when the
/// values come from arithmetic that may leave the unit interval.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> samples);
  explicit GrayImage(ScalarField field);

  static GrayImage clamped(ScalarField field);
  static GrayImage clamped(int width, int height, std::vector<double> samples);

  int width() const { return grid_.width(); }
  int height() const { return grid_.height(); }
  std::size_t size() const { return grid_.size(); }
  double at(int x, int y) const { return grid_.at(x, y); }
  double operator[](std::size_t i) const { return grid_[i]; }
  std::span<const double> samples() const& { return grid_.values(); }
  std::span<const double> samples() const&& = delete;
  const ScalarField& field() const { return grid_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  void validate() const;
  ScalarField grid_;
};

/// Row-major boolean raster; stored as bytes holding 0 or 1.
class BinaryMask : public Grid<std::uint8_t> {
 public:
  using Grid<std::uint8_t>::Grid;
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  bool test(int x, int y) const { return at(x, y) != 0; }
  void set(int x, int y, bool v) { at(x, y) = v ? 1 : 0; }
  std::size_t count() const;
};

/// Connected-component identifiers: 0 = background, dense 1..count otherwise.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height);
  /// Validates density of the id set and derives `count`.
  LabelMap(int width, int height, std::vector<std::uint32_t> ids);

  int width() const { return ids_.width(); }
  int height() const { return ids_.height(); }
  std::size_t size() const { return ids_.size(); }
  std::uint32_t count() const { return count_; }
  std::uint32_t at(int x, int y) const { return ids_.at(x, y); }
  std::uint32_t operator[](std::size_t i) const { return ids_[i]; }
  std::span<const std::uint32_t> ids() const { return ids_.values(); }

  BinaryMask support() const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  Grid<std::uint32_t> ids_;
  std::uint32_t count_ = 0;
};

/// Physical size of one pixel edge.
class PixelScale {
 public:
  explicit PixelScale(double nm_per_px);
  double nm_per_px() const { return nm_per_px_; }

 private:
  double nm_per_px_;
};

}  // namespace himforge
