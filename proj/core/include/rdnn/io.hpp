#pragma once

#include <string>

namespace rdnn {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

double parse_double(const std::string& text);  // throws Errc::BadRow

std::string read_file(const std::string& path);

// Writes via a sibling temp file and rename so readers never see a
// partially written artifact.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace rdnn
