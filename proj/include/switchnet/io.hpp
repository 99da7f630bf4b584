#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace switchnet {

/// Whole file as bytes. Throws DataError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partial file.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

std::uint32_t crc32(std::string_view bytes);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);
/// Strict parse of a full token; throws DataError.
double parse_double(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

}  // namespace switchnet
