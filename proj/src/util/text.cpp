#include "arena/util/text.hpp"

#include <array>
#include <cctype>
#include <cmath>

#include <openssl/evp.h>

#include <fmt/format.h>

namespace arena {

std::string group_thousands(std::int64_t amount) {
  const bool negative = amount < 0;
  std::string digits = std::to_string(negative ? -amount : amount);
  std::string out;
  const auto n = digits.size();
  for (std::size_t i = 0; i < n; ++i) {
    out += digits[i];
    const auto remaining = n - i - 1;
    if (remaining > 0 && remaining % 3 == 0) out += ',';
  }
  return negative ? "-" + out : out;
}

namespace {

std::string trim_decimals(std::string text) {
  if (text.find('.') == std::string::npos) return text;
  while (!text.empty() && text.back() == '0') text.pop_back();
  if (!text.empty() && text.back() == '.') text.pop_back();
  return text;
}

}  // namespace

std::string format_amount(double amount) {
  const double rounded = std::round(amount * 100.0) / 100.0;
  const double whole = std::trunc(rounded);
  std::string out = group_thousands(static_cast<std::int64_t>(whole));
  const auto frac = trim_decimals(fmt::format("{:.2f}", std::abs(rounded - whole)));
  if (frac != "0") out += frac.substr(1);
  return out;
}

std::string format_percent(double fraction) {
  auto text = trim_decimals(fmt::format("{:.2f}", fraction * 100.0));
  return text == "-0" ? "0" : text;
}

std::string_view trim(std::string_view text) noexcept {
  const auto* ws = " \t\r\n";
  const auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t word_count(std::string_view text) noexcept {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

}  // namespace arena
