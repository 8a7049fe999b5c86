#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace lapue {

// Minimal RFC 4180 CSV writer: comma separator, CRLF-free LF line ends,
// quoting only when a field contains comma, quote, or newline.  Numbers are
// written with enough digits ('%.17g') to round-trip doubles exactly.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void write_row(const std::vector<std::string>& fields);

  static std::string format(double x);
  static std::string format(int x);
  static std::string format(std::uint64_t x);

 private:
  std::ofstream out_;
};

}  // namespace lapue
