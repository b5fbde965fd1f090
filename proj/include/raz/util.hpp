#pragma once

#include <string>

namespace raz {

// Format a double with 17 significant digits (round-trip exact for binary64).
std::string fmt17(double x);

// Write content to path atomically (temp file + rename); throws IoError.
void write_file(const std::string& path, const std::string& content);

// Read an entire file into a string; throws IoError.
std::string read_file(const std::string& path);

// sign(x) with sign(0) = 0 exactly.
inline double sign3(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

} // namespace raz
