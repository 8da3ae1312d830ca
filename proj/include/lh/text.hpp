#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lh {

/// Six significant digits, %g-style, independent of the global locale.
[[nodiscard]] std::string format_number(double v);
/// Like format_number but renders an absent value as "NA".
[[nodiscard]] std::string format_number(const std::optional<double>& v);
/// Shortest representation that parses back to the identical double.
[[nodiscard]] std::string format_exact(double v);

[[nodiscard]] std::optional<double> parse_double(std::string_view s) noexcept;
[[nodiscard]] std::optional<long long> parse_int(std::string_view s) noexcept;
[[nodiscard]] std::vector<std::string_view> split_ws(std::string_view s);
[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// skipped. Duplicate keys and lines without '=' raise MalformedHeader.
[[nodiscard]] KeyValues parse_key_values(std::string_view text);
[[nodiscard]] KeyValues read_key_value_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

}  // namespace lh
