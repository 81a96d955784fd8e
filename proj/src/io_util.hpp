#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace bayesperf {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Parses JSON from a file, translating syntax failures into ParseError.
nlohmann::json load_json(const std::string& path);

// Shortest decimal form that round-trips through strtod.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context = "value");
long parse_long(const std::string& s, const std::string& context = "value");

// Splits one CSV line on commas. Fields in this project never contain commas
// or quotes, so no quoting rules are needed.
std::vector<std::string> split_csv_line(const std::string& line);

// Splits file content into lines, tolerating a trailing newline and CRLF.
std::vector<std::string> split_lines(const std::string& content);

}  // namespace bayesperf
