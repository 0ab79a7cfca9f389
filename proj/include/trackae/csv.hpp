#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trackae::csv {

// Plain comma splitting; the file formats here never embed commas or quotes.
std::vector<std::string> split(std::string_view line);

// Shortest round-trip formatting (std::to_chars).
std::string fmt(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);

} // namespace trackae::csv
