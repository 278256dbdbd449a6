// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ihs {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
std::string to_hex(const Digest& digest);
/// Inverse of to_hex; throws a Format error on malformed input.
Digest digest_from_hex(std::string_view hex);
std::string sha256_file_hex(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partial file. The temporary is removed on any failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ihs
