#pragma once

// Byte-level file helpers shared by the dataset and model formats.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rasnet::io {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Little-endian encoding of 32-bit floats, independent of host order.
std::vector<std::uint8_t> encode_f32_le(std::span<const float> values);

/// Throws DataError when the byte count is not a multiple of 4.
std::vector<float> decode_f32_le(std::span<const std::uint8_t> bytes);

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Throws DataError when the file cannot be read.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

}  // namespace rasnet::io
