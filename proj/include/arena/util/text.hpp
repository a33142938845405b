#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace arena {

// 1000 -> "1,000"; 1234567.5 -> "1,234,567.5" (at most two decimals).
std::string group_thousands(std::int64_t amount);
std::string format_amount(double amount);

// Percentage with at most two decimals and no trailing zeros: 0.1 -> "10".
std::string format_percent(double fraction);

std::string_view trim(std::string_view text) noexcept;
std::string to_lower(std::string_view text);
std::size_t word_count(std::string_view text) noexcept;

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace arena
