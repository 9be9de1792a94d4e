#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace bodyimage {

inline constexpr int kChannels = 3;

struct Extent {
  int height = 0;
  int width = 0;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t components() const { return pixels() * kChannels; }
  bool operator==(const Extent&) const = default;
};

/// Row-major H x W x 3 image, components in [0, 1] unless stated otherwise.
struct Image {
  Extent extent;
  std::vector<float> data;

  Image() = default;
  explicit Image(Extent e, float fill = 0.0f) : extent(e), data(e.components(), fill) {}

  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * extent.width + col) * kChannels + channel;
  }
  float& at(int row, int col, int channel) { return data[index(row, col, channel)]; }
  float at(int row, int col, int channel) const { return data[index(row, col, channel)]; }

  bool operator==(const Image&) const = default;
};

/// Per-component boolean mask, H x W x 3 (channels may disagree).
struct Mask {
  Extent extent;
  std::vector<std::uint8_t> data;

  Mask() = default;
  explicit Mask(Extent e, bool fill = false) : extent(e), data(e.components(), fill ? 1 : 0) {}

  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * extent.width + col) * kChannels + channel;
  }
  bool at(int row, int col, int channel) const { return data[index(row, col, channel)] != 0; }
  void set(int row, int col, int channel, bool v) { data[index(row, col, channel)] = v ? 1 : 0; }

  std::size_t count() const;
  bool any() const { return count() > 0; }

  bool operator==(const Mask&) const = default;
};

/// 8-bit RGBA raster (masked body image output).
struct RgbaImage {
  Extent extent;
  std::vector<std::uint8_t> data;  // H x W x 4
};

std::uint8_t to_byte(float value);

}  // namespace bodyimage
