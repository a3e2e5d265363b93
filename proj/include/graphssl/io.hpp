#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "graphssl/common.hpp"

namespace graphssl {

// All numeric output goes through this so files can be compared byte-wise.
inline std::string format_double(double v) { return fmt::format("{:.17g}", v == 0.0 ? 0.0 : v); }

std::vector<std::string> split_csv_line(std::string_view line);
double parse_double(std::string_view token, std::string_view context);
long long parse_int(std::string_view token, std::string_view context);
std::string trim(std::string_view s);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace graphssl
