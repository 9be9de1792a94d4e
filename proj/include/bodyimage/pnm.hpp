#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bodyimage/image.hpp"

namespace bodyimage::pnm {

// Binary netpbm writers: P6 (RGB), P5 (gray), P7 (RGBA, TUPLTYPE RGB_ALPHA).
// All maxval 255, row-major, channels interleaved.

std::string encode_ppm(const Image& image);
std::string encode_pgm(Extent extent, const std::vector<std::uint8_t>& gray);
std::string encode_pam(const RgbaImage& image);

/// One mask channel as P5 with 0/255 values.
std::string encode_mask_pgm(const Mask& mask, int channel);
/// All three mask channels as a 0/255 P6 image.
std::string encode_mask_ppm(const Mask& mask);

void write_file(const std::filesystem::path& path, const std::string& bytes);

struct Raster {
  Extent extent;
  int channels = 0;  // 1 for P5, 3 for P6
  std::vector<std::uint8_t> data;
};

/// Parses P5 / P6 with maxval 255; throws Error(kMalformedHeader) otherwise.
Raster decode(const std::string& bytes);
Raster read_file(const std::filesystem::path& path);

}  // namespace bodyimage::pnm
