#pragma once

// Minimal RFC 4180 reader for the knowledge-base files.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace edg::detail {

using CsvRow = std::vector<std::string>;

// Parses quoted fields, doubled quotes and embedded newlines. Blank lines
// are skipped. Throws SchemaError on an unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view text, const std::string& source);

std::vector<CsvRow> read_csv_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Splits on `sep`, trimming whitespace and dropping empty items.
std::vector<std::string> split_list(std::string_view s, char sep);

std::string trim(std::string_view s);

}  // namespace edg::detail
