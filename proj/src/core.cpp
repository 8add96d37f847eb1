#include "himforge/core.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace himforge {

GrayImage::GrayImage(int width, int height, double fill) : grid_(width, height, fill) {
  validate();
}

GrayImage::GrayImage(int width, int height, std::vector<double> samples)
    : grid_(width, height, std::move(samples)) {
  validate();
}

GrayImage::GrayImage(ScalarField field) : grid_(std::move(field)) { validate(); }

GrayImage GrayImage::clamped(ScalarField field) {
  for (double& v : field.values()) {
    v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  }
  return GrayImage(std::move(field));
}

GrayImage GrayImage::clamped(int width, int height, std::vector<double> samples) {
  return clamped(ScalarField(width, height, std::move(samples)));
}

void GrayImage::validate() const {
  for (double v : grid_.values()) {
    // NaN fails both comparisons
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("gray sample outside [0,1]: " + std::to_string(v));
    }
  }
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : Grid<std::uint8_t>(width, height, std::move(bits)) {
  for (auto& b : values()) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values().begin(), values().end(), 1));
}

LabelMap::LabelMap(int width, int height) : ids_(width, height, 0u) {}

LabelMap::LabelMap(int width, int height, std::vector<std::uint32_t> ids)
    : ids_(width, height, std::move(ids)) {
  std::uint32_t max_id = 0;
  for (auto v : ids_.values()) max_id = std::max(max_id, v);
  std::vector<bool> seen(static_cast<std::size_t>(max_id) + 1, false);
  for (auto v : ids_.values()) seen[v] = true;
  for (std::uint32_t id = 1; id <= max_id; ++id) {
    if (!seen[id]) throw InvalidArgument("label ids are not dense: missing " + std::to_string(id));
  }
  count_ = max_id;
}

BinaryMask LabelMap::support() const {
  BinaryMask m(width(), height());
  for (std::size_t i = 0; i < size(); ++i) m[i] = ids_[i] != 0 ? 1 : 0;
  return m;
}

PixelScale::PixelScale(double nm_per_px) : nm_per_px_(nm_per_px) {
  if (!(nm_per_px > 0.0) || !std::isfinite(nm_per_px)) {
    throw InvalidArgument("pixel scale must be positive");
  }
}

}  // namespace himforge
