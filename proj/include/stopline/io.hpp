#pragma once

#include <string>

namespace stopline {

/// Shortest round-trip-safe text for a double (17 significant digits).
std::string fmt17(double v);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace stopline
