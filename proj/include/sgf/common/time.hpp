#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace sgf {

using Instant = std::chrono::sys_time<std::chrono::milliseconds>;

Instant now_utc();

// "YYYY-MM-DDTHH:MM:SS[.fff]Z"; the trailing Z is optional on input, a space
// may replace the T.
std::string format_instant(Instant t);
std::optional<Instant> parse_instant(std::string_view text);

std::string format_date(std::chrono::year_month_day d);
std::optional<std::chrono::year_month_day> parse_date(std::string_view text);

}  // namespace sgf
