#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace geodens::app {

/// Shortest decimal text that parses back to the same double ('.' separator).
std::string format_double(double value);

/// Strict full-string parsers. They return false on malformed or trailing text.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

/// Line-buffered CSV file with LF endings. Rows are flushed as they are
/// written so partial runs leave readable files.
class CsvWriter {
 public:
  using Cell = std::variant<double, long long, std::string>;

  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(std::initializer_list<Cell> cells);
  void row(const std::vector<Cell>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace geodens::app
