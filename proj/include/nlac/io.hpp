#pragma once

#include <string>
#include <vector>

namespace nlac::io {

// Library version, optionally suffixed with the source revision it was
// built from.
const char* version_string();

// Shortest round-trip decimal form of a double (printf %.17g trimmed by the
// writer below; parsing it back recovers the exact value).
std::string format_double(double v);

// Column-oriented CSV with a header row; all columns must share one length.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace nlac::io
