#pragma once

// Sample-stream files and CSV helpers.
//
// Binary complex stream (little-endian):
//   bytes 0..7   magic "FOPACSQ1"
//   bytes 8..15  uint64 sample count N
//   then N pairs of IEEE-754 binary64 (re, im)
//
// CSV tables start with a "# <schema>/<version>" line followed by a header
// row; values use the shortest form that reads back to the same double.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fopaeq/types.hpp"

namespace fopaeq::io {

void write_complex_binary(std::ostream& os, const ComplexSeq& x);
ComplexSeq read_complex_binary(std::istream& is);
void write_complex_binary(const std::filesystem::path& path, const ComplexSeq& x);
ComplexSeq read_complex_binary(const std::filesystem::path& path);

void write_complex_csv(std::ostream& os, const ComplexSeq& x);
ComplexSeq read_complex_csv(std::istream& is);

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::string_view schema, const std::vector<std::string>& columns);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(std::size_t v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(std::string_view v);
  // Closes the row; throws if the column count does not match the header.
  void end_row();

 private:
  void sep();
  std::ostream& os_;
  std::size_t columns_;
  std::size_t current_ = 0;
};

std::string format_double(double v);

}  // namespace fopaeq::io
