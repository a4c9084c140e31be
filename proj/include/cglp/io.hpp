#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cglp::io {

/// Shortest decimal representation that round-trips to the same double.
std::string fmt(double v);

/// Opens path for writing, creating parent directories. Throws cglp::Error on failure.
std::ofstream open_output(const std::filesystem::path& path);

/// Writes each line prefixed with "# ".
void write_comment_header(std::ostream& os, const std::vector<std::string>& lines);

}  // namespace cglp::io
