#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace operatrack {

/// Comma-separated rows with a mandatory header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // source line of each row, for error messages
};

/// Parses CSV text. Blank lines are skipped; fields are trimmed. Throws DataError when a
/// row's field count differs from the header or the header differs from `expected_header`
/// (if non-empty).
CsvTable parse_csv(std::string_view text, const std::vector<std::string>& expected_header = {});
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header = {});

/// Strict number parsing; throws DataError naming `what` on failure.
double parse_double(std::string_view field, std::string_view what);
long long parse_integer(std::string_view field, std::string_view what);

/// Fixed-point formatting ("%.*f").
std::string format_fixed(double value, int decimals);
/// Shortest round-trippable formatting ("%.17g").
std::string format_exact(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace operatrack
