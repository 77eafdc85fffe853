#include "egmlatent/core/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "egmlatent/core/error.hpp"

namespace egmlatent {
namespace {

constexpr std::array<char, 4> kMagic = {'E', 'G', 'M', 'T'};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorKind::Corruption, "truncated tensor stream");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

namespace le {
void put_u8(std::ostream& out, std::uint8_t v) { put_le(out, v); }
void put_u16(std::ostream& out, std::uint16_t v) { put_le(out, v); }
void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
std::uint8_t get_u8(std::istream& in) { return get_le<std::uint8_t>(in); }
std::uint16_t get_u16(std::istream& in) { return get_le<std::uint16_t>(in); }
std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
}  // namespace le

void write_tensor(std::ostream& out, const Tensor& tensor) {
  if (tensor.rank() > 255) throw Error(ErrorKind::Dimension, "rank exceeds 255");
  out.write(kMagic.data(), kMagic.size());
  le::put_u16(out, kTensorFormatVersion);
  le::put_u8(out, static_cast<std::uint8_t>(tensor.rank()));
  for (std::size_t d : tensor.shape()) le::put_u64(out, d);

  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(float)));
  } else {
    for (float v : tensor.values()) le::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing tensor");
}

Tensor read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4) throw Error(ErrorKind::Corruption, "truncated tensor header");
  if (magic != kMagic) throw Error(ErrorKind::Corruption, "bad tensor magic");
  const std::uint16_t version = le::get_u16(in);
  if (version != kTensorFormatVersion) {
    throw Error(ErrorKind::Version, "tensor format version " + std::to_string(version) +
                                        ", expected " + std::to_string(kTensorFormatVersion));
  }
  const std::uint8_t rank = le::get_u8(in);
  Shape shape(rank);
  std::uint64_t count = 1;
  for (auto& d : shape) {
    const std::uint64_t v = le::get_u64(in);
    if (v != 0 && count > kMaxElements / v) {
      throw Error(ErrorKind::Corruption, "implausible tensor dimensions");
    }
    count *= v;
    d = static_cast<std::size_t>(v);
  }
  std::vector<float> values(static_cast<std::size_t>(count));
  const auto bytes = static_cast<std::streamsize>(values.size() * sizeof(float));
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values.data()), bytes);
    if (in.gcount() != bytes) throw Error(ErrorKind::Corruption, "truncated tensor payload");
  } else {
    for (auto& v : values) v = std::bit_cast<float>(le::get_u32(in));
  }
  return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_tensor(out, tensor);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArtifact, "cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace egmlatent
