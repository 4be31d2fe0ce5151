#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace htsgd {

/// Shortest decimal string that parses back to exactly `value`
/// ("nan", "inf", "-inf" for non-finite values).
std::string format_double(double value);
/// Parses a double with std::from_chars; throws DomainError on trailing garbage.
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// Comma-separated table with a header row. No quoting: fields never contain
/// commas in the files this project writes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws DomainError if missing.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace htsgd
