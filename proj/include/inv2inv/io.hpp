#pragma once

#include <filesystem>
#include <string>

#include "inv2inv/tensor.hpp"

namespace inv2inv {

// IVIT tensor file: magic "IVIT", one version byte (0x01), rank as u32
// little-endian, each dim as u32 little-endian, payload as f32 little-endian
// IEEE in row-major order. Values are truncated to 32-bit on write; a
// write/read round trip is exact at 32-bit precision.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// Binary PGM (P5) for single-channel images, PPM (P6) for 3-channel, 8-bit,
// maxval 255. The value map is linear [-1, 1] -> [0, 255] with
// round-half-away-from-zero; reading inverts it. Out-of-range values clamp.
void write_image(const std::filesystem::path& path, const Tensor& img);
Tensor read_image(const std::filesystem::path& path);

// FNV-1a 64-bit digests, used for config hashes and input digests.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t file_digest(const std::filesystem::path& path);

std::string to_hex(std::uint64_t v);

}  // namespace inv2inv
