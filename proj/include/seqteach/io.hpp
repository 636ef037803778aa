#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace seqteach {

/// Whole-file read; throws DataError when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename so readers never see a partial
/// file. Creates parent directories. Throws ComputeError on I/O failure.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace seqteach
