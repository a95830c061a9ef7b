#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace objrec {

std::string_view trim(std::string_view s) noexcept;

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a CSV field when it contains a comma, quote or whitespace edge.
std::string csv_field(std::string_view value);

std::optional<double> parse_double(std::string_view s) noexcept;
std::optional<long long> parse_int(std::string_view s) noexcept;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace objrec
