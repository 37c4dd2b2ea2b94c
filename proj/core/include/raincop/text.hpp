#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace raincop::text {

/// Shortest decimal form that round-trips; "0" for zero, "nan"/"inf" as is.
std::string format_double(double v);

/// Strict parse of the whole token; std::nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::string_view trim(std::string_view s);

/// Splits one CSV record on commas. Fields are trimmed; quoting is not
/// supported (ids and numbers never need it).
std::vector<std::string> split_csv(std::string_view line);

}  // namespace raincop::text
