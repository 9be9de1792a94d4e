#include "bodyimage/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bodyimage {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(),
                                                 [](std::uint8_t v) { return v != 0; }));
}

std::uint8_t to_byte(float value) {
  const float clamped = std::clamp(value, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

}  // namespace bodyimage
