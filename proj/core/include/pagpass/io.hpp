#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace pagpass {

// Writes to "<path>.tmp.<pid>" and renames over `path`, so readers never
// observe a partial file. Throws DataError on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Lowercase hex FNV-1a-64 of the file contents.
std::string file_digest(const std::filesystem::path& path);

std::string join_lines(std::span<const std::string> lines);

}  // namespace pagpass
