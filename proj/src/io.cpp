#include "fopaeq/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fopaeq/errors.hpp"

namespace fopaeq::io {

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'O', 'P', 'A', 'C', 'S', 'Q', '1'};

static_assert(std::endian::native == std::endian::little, "binary stream writer assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ArgumentError("read_complex_binary: truncated stream");
  return v;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);  // shortest round-trip form
  return std::string(buf.data(), res.ptr);
}

void write_complex_binary(std::ostream& os, const ComplexSeq& x) {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(os, static_cast<std::uint64_t>(x.size()));
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    put<double>(os, x(k).real());
    put<double>(os, x(k).imag());
  }
}

ComplexSeq read_complex_binary(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ArgumentError("read_complex_binary: bad magic");
  const auto n = get<std::uint64_t>(is);
  ComplexSeq x(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    x(k) = cdouble(re, im);
  }
  return x;
}

void write_complex_binary(const std::filesystem::path& path, const ComplexSeq& x) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ArgumentError("cannot open " + path.string() + " for writing");
  write_complex_binary(os, x);
}

ComplexSeq read_complex_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open " + path.string());
  return read_complex_binary(is);
}

void write_complex_csv(std::ostream& os, const ComplexSeq& x) {
  CsvWriter w(os, "fopaeq.samples/1", {"n", "re", "im"});
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    w << static_cast<long long>(k) << x(k).real() << x(k).imag();
    w.end_row();
  }
}

ComplexSeq read_complex_csv(std::istream& is) {
  std::string line;
  std::vector<cdouble> values;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string n, re, im;
    std::getline(row, n, ',');
    std::getline(row, re, ',');
    std::getline(row, im, ',');
    values.emplace_back(std::stod(re), std::stod(im));
  }
  ComplexSeq x(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) x(static_cast<Eigen::Index>(k)) = values[k];
  return x;
}

CsvWriter::CsvWriter(std::ostream& os, std::string_view schema, const std::vector<std::string>& columns)
    : os_(os), columns_(columns.size()) {
  os_ << "# " << schema << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
  os_ << '\n';
}

void CsvWriter::sep() {
  if (current_++ > 0) os_ << ',';
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  os_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  sep();
  os_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view v) {
  sep();
  os_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (current_ != columns_) throw ArgumentError("CsvWriter: row has wrong number of columns");
  os_ << '\n';
  current_ = 0;
}

}  // namespace fopaeq::io
