#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "egmlatent/core/tensor.hpp"

namespace egmlatent {

// "EGMT" framing: magic, u16 version, u8 rank, u64 dims, float32 payload.
// Every integer and float is little-endian regardless of host order.
inline constexpr std::uint16_t kTensorFormatVersion = 1;

void write_tensor(std::ostream& out, const Tensor& tensor);
Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor load_tensor(const std::filesystem::path& path);

namespace le {
void put_u8(std::ostream& out, std::uint8_t v);
void put_u16(std::ostream& out, std::uint16_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
std::uint8_t get_u8(std::istream& in);
std::uint16_t get_u16(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
}  // namespace le

}  // namespace egmlatent
