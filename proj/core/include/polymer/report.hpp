#pragma once

#include <string>

namespace polymer {

// Build identifier (git describe when available).
std::string version_string();

// Fixed-format float for CSV cells: shortest result of round-tripping %.17g.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace polymer
