#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace iae::io {

// Whole-file helpers; failures throw InputError naming the path.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);
void append_file(const std::filesystem::path& path, std::string_view contents);

// Shortest text form that parses back to the identical double.
std::string format_double(double v);
// Strict parse of a whole field; throws InputError with `context` on failure.
double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

}  // namespace iae::io
