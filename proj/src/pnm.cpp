#include "bodyimage/pnm.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "bodyimage/error.hpp"

namespace bodyimage::pnm {

namespace {

std::string header(const char* magic, Extent e) {
  return std::string(magic) + "\n" + std::to_string(e.width) + " " +
         std::to_string(e.height) + "\n255\n";
}

// Reads the next whitespace-delimited token, skipping '#' comments.
std::string next_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

int parse_positive(const std::string& token) {
  if (token.empty() || token.size() > 9) fail(ErrorCode::kMalformedHeader, "pnm: bad number '" + token + "'");
  for (char c : token) {
    if (!std::isdigit(static_cast<unsigned char>(c))) fail(ErrorCode::kMalformedHeader, "pnm: bad number '" + token + "'");
  }
  const int v = std::stoi(token);
  if (v <= 0) fail(ErrorCode::kMalformedHeader, "pnm: non-positive header field");
  return v;
}

}  // namespace

std::string encode_ppm(const Image& image) {
  std::string out = header("P6", image.extent);
  out.reserve(out.size() + image.data.size());
  for (float v : image.data) out.push_back(static_cast<char>(to_byte(v)));
  return out;
}

std::string encode_pgm(Extent extent, const std::vector<std::uint8_t>& gray) {
  require(gray.size() == extent.pixels(), ErrorCode::kShape, "pgm: pixel count mismatch");
  std::string out = header("P5", extent);
  out.append(gray.begin(), gray.end());
  return out;
}

std::string encode_pam(const RgbaImage& image) {
  require(image.data.size() == image.extent.pixels() * 4, ErrorCode::kShape, "pam: pixel count mismatch");
  std::ostringstream head;
  head << "P7\nWIDTH " << image.extent.width << "\nHEIGHT " << image.extent.height
       << "\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n";
  std::string out = head.str();
  out.append(image.data.begin(), image.data.end());
  return out;
}

std::string encode_mask_pgm(const Mask& mask, int channel) {
  require(channel >= 0 && channel < kChannels, ErrorCode::kInvalidArgument, "pgm: channel out of range");
  std::vector<std::uint8_t> gray(mask.extent.pixels());
  for (std::size_t p = 0; p < gray.size(); ++p) gray[p] = mask.data[p * kChannels + channel] ? 255 : 0;
  return encode_pgm(mask.extent, gray);
}

std::string encode_mask_ppm(const Mask& mask) {
  std::string out = header("P6", mask.extent);
  for (std::uint8_t v : mask.data) out.push_back(static_cast<char>(v ? 255 : 0));
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::kIo, "write failed: " + path.string());
}

Raster decode(const std::string& bytes) {
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  Raster r;
  if (magic == "P5") {
    r.channels = 1;
  } else if (magic == "P6") {
    r.channels = 3;
  } else {
    fail(ErrorCode::kMalformedHeader, "pnm: unsupported magic '" + magic + "'");
  }
  r.extent.width = parse_positive(next_token(bytes, pos));
  r.extent.height = parse_positive(next_token(bytes, pos));
  if (parse_positive(next_token(bytes, pos)) != 255) fail(ErrorCode::kMalformedHeader, "pnm: maxval must be 255");
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = r.extent.pixels() * r.channels;
  if (pos > bytes.size() || bytes.size() - pos < need) fail(ErrorCode::kTruncatedPayload, "pnm: payload truncated");
  r.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return r;
}

Raster read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode(ss.str());
}

}  // namespace bodyimage::pnm
