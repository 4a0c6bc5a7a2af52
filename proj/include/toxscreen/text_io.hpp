#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace toxscreen {

// Minimal RFC-4180 style CSV: comma separated, optional double quotes, lines
// starting with '#' are comments. The first non-comment row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;  // without the leading '#'

  // Column index by name; throws a format error if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, std::string_view source_name);

// Checks the header against the expected leading columns.
void require_columns(const CsvTable& table, const std::vector<std::string>& expected,
                     std::string_view source_name);

std::string csv_escape(std::string_view field);

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Shortest text that parses back to the same double ("%.17g"-equivalent,
// non-finite values as inf / -inf / nan).
std::string format_real(double v);
double parse_real(std::string_view s, std::string_view what);
std::uint64_t parse_u64(std::string_view s, std::string_view what);

// FNV-1a over the given bytes, rendered as 16 hex digits. Used for provenance ids.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace toxscreen
