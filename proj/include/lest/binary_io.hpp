#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lest/matrix.hpp"

namespace lest {

// Byte-level little-endian codecs. All on-disk formats in this project are
// packed LE regardless of host order.

inline std::uint32_t load_le_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_le_u32(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
    p[2] = static_cast<unsigned char>(v >> 16);
    p[3] = static_cast<unsigned char>(v >> 24);
}

inline float load_le_f32(const unsigned char* p) { return std::bit_cast<float>(load_le_u32(p)); }
inline void store_le_f32(unsigned char* p, float v) { store_le_u32(p, std::bit_cast<std::uint32_t>(v)); }

/// Reads a whole file into memory. Throws Error if it cannot be opened.
std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);

/// Writes a byte buffer, truncating any existing file.
void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

/// Serializes a matrix as packed row-major float32 LE (the logits format).
std::vector<unsigned char> matrix_to_f32le(const Matrix& m);

/// Writes a matrix as packed row-major float32 LE.
void write_matrix_f32le(const std::filesystem::path& path, const Matrix& m);

} // namespace lest
