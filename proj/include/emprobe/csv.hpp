#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace emprobe::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF endings.
// Blank lines are skipped. A leading UTF-8 BOM is dropped.
std::vector<Row> read_file(const std::filesystem::path& path);

std::string escape(const std::string& field);

// 17 significant digits ("%.17g"); parses back to the identical double.
std::string format_double(double value);

// Strict parse of a whole field as a double; returns false on trailing junk.
bool parse_double(const std::string& text, double& out);

}  // namespace emprobe::csv
