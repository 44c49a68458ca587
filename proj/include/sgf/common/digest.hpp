#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace sgf {

// SHA-256 as lowercase hex.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

// First eight bytes of the SHA-256, big-endian. Used for weight checksums.
std::uint64_t digest64(std::span<const std::byte> bytes);

}  // namespace sgf
