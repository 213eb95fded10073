#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace burrsim::text {

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string_view> split_ws(std::string_view s);
std::string to_lower(std::string_view s);

std::optional<double> parse_double(std::string_view s) noexcept;
std::optional<long long> parse_int(std::string_view s) noexcept;

// Shortest text that parses back to the identical double.
std::string format_double(double v);

} // namespace burrsim::text
