#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace disco {

// Minimal RFC-4180-style CSV: quoted fields, "" escapes, CRLF tolerated.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

void write_csv_row(std::ostream& os, std::span<const std::string> fields);

}  // namespace disco
