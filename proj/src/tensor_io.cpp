#include "bodyimage/tensor_io.hpp"

#include <cstring>
#include <fstream>

#include "bodyimage/dataset.hpp"

namespace bodyimage {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  bool has(std::size_t n) const { return bytes.size() - pos >= n; }
  std::uint32_t u32(ErrorCode on_short) {
    if (!has(4)) fail(on_short, "checkpoint: unexpected end of file");
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
};

}  // namespace

std::string encode_tensors(const std::vector<Tensor<float>>& tensors) {
  std::string out = "SMNN";
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
  }
  return out;
}

std::vector<Tensor<float>> decode_tensors(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "SMNN") != 0) fail(ErrorCode::kMalformedHeader, "checkpoint: malformed header");
  Reader in{bytes, 4};
  const std::uint32_t version = in.u32(ErrorCode::kMalformedHeader);
  if (version != kCheckpointVersion) fail(ErrorCode::kVersionMismatch, "checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t count = in.u32(ErrorCode::kMalformedHeader);
  if (count > 4096) fail(ErrorCode::kMalformedHeader, "checkpoint: implausible tensor count");
  std::vector<Tensor<float>> tensors;
  tensors.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t rank = in.u32(ErrorCode::kTruncatedPayload);
    if (rank > 8) fail(ErrorCode::kMalformedHeader, "checkpoint: implausible rank");
    Shape shape(rank);
    for (auto& d : shape) {
      const std::uint32_t v = in.u32(ErrorCode::kTruncatedPayload);
      if (v == 0 || v > (1u << 24)) fail(ErrorCode::kMalformedHeader, "checkpoint: implausible dim");
      d = static_cast<int>(v);
    }
    const std::size_t n = shape_size(shape);
    if (!in.has(n * sizeof(float))) fail(ErrorCode::kTruncatedPayload, "checkpoint: payload truncated");
    std::vector<float> data(n);
    std::memcpy(data.data(), bytes.data() + in.pos, n * sizeof(float));
    in.pos += n * sizeof(float);
    tensors.emplace_back(std::move(shape), std::move(data));
  }
  if (in.pos != bytes.size()) fail(ErrorCode::kPayloadMismatch, "checkpoint: trailing bytes after last tensor");
  return tensors;
}

void save_tensors(const std::vector<Tensor<float>>& tensors, const std::filesystem::path& path) {
  const std::string bytes = encode_tensors(tensors);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<Tensor<float>> load_tensors(const std::filesystem::path& path) {
  return decode_tensors(data::read_binary(path));
}

}  // namespace bodyimage
