#include "lapue/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace lapue {

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("csv: cannot open " + path + " for writing");
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") != std::string::npos) {
      out_ << '"';
      for (char c : f) {
        if (c == '"') out_ << "\"\"";
        else out_ << c;
      }
      out_ << '"';
    } else {
      out_ << f;
    }
  }
  out_ << '\n';
  if (!out_) throw std::runtime_error("csv: write failed");
}

std::string CsvWriter::format(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string CsvWriter::format(int x) { return std::to_string(x); }

std::string CsvWriter::format(std::uint64_t x) { return std::to_string(x); }

}  // namespace lapue
