#include "plom/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "plom-bin I/O assumes a little-endian host");
static_assert(sizeof(double) == 8);

namespace plom {

namespace {

constexpr char kMagic[4] = {'P', 'L', 'O', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const std::string& context) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw ParseError(context + ": truncated file (u32 field)");
  return v;
}

std::uint64_t read_u64(std::istream& in, const std::string& context) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw ParseError(context + ": truncated file (u64 field)");
  return v;
}

double parse_cell(const std::string& cell, std::size_t line,
                  std::size_t column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError("csv: cannot parse number at row " +
                     std::to_string(line) + ", column " +
                     std::to_string(column) + ": '" + cell + "'");
  return value;
}

bool looks_numeric(const std::string& cell) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos
                        ? std::string()
                        : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_plom_bin(std::ostream& out, const Matrix& values) {
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u64(out, std::uint64_t(values.rows()));
  write_u64(out, std::uint64_t(values.cols()));
  // Eigen's default storage is already column-major.
  out.write(reinterpret_cast<const char*>(values.data()),
            std::streamsize(sizeof(double)) * values.size());
}

Matrix read_plom_bin(std::istream& in, const std::string& context) {
  char magic[4] = {};
  if (!in.read(magic, sizeof(magic)))
    throw ParseError(context + ": truncated file (magic)");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(context + ": bad magic bytes, not a plom-bin matrix");
  const std::uint32_t version = read_u32(in, context);
  if (version != kVersion)
    throw VersionMismatch(context + ": plom-bin version " +
                          std::to_string(version) + ", expected " +
                          std::to_string(kVersion));
  const std::uint64_t rows = read_u64(in, context);
  const std::uint64_t cols = read_u64(in, context);
  if (rows == 0 || cols == 0 || rows > (1ull << 32) || cols > (1ull << 32))
    throw ParseError(context + ": implausible matrix shape " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  Matrix values{Index(rows), Index(cols)};
  if (!in.read(reinterpret_cast<char*>(values.data()),
               std::streamsize(sizeof(double)) * values.size()))
    throw ParseError(context + ": truncated file (matrix payload)");
  return values;
}

void save_matrix(const DataMatrix& data, const std::filesystem::path& path,
                 MatrixFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

  if (format == MatrixFormat::plom_bin) {
    write_plom_bin(out, data.values);
  } else {
    char buf[64];
    if (!data.feature_labels.empty()) {
      for (Index i = 0; i < data.features(); ++i) {
        if (i) out << ',';
        out << data.feature_labels[i];
      }
      out << '\n';
    }
    // One sample per line so the header can carry the feature names.
    for (Index j = 0; j < data.samples(); ++j) {
      for (Index i = 0; i < data.features(); ++i) {
        if (i) out << ',';
        const int len =
            std::snprintf(buf, sizeof(buf), "%.17g", data.values(i, j));
        out.write(buf, len);
      }
      out << '\n';
    }
  }
  if (!out.good())
    throw IoError("write failure on '" + path.string() + "'");
}

DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format,
                       bool transpose) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");

  DataMatrix data;
  if (format == MatrixFormat::plom_bin) {
    data.values = read_plom_bin(in, path.string());
    return data;
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() ||
        line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto cells = split_csv_line(line);
    if (rows.empty() && header.empty() && line_no == 1) {
      const bool numeric = std::all_of(cells.begin(), cells.end(),
                                       [](const auto& c) {
                                         return looks_numeric(c);
                                       });
      if (!numeric) {
        header = cells;
        width = cells.size();
        continue;
      }
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw ParseError("csv: row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(width));
    std::vector<double> parsed(width);
    for (std::size_t c = 0; c < width; ++c)
      parsed[c] = parse_cell(cells[c], line_no, c + 1);
    rows.push_back(std::move(parsed));
  }
  if (rows.empty()) throw ParseError("csv: no data rows in '" +
                                     path.string() + "'");

  // Default layout: one sample per line, features as columns.
  Matrix values(Index(width), Index(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t i = 0; i < width; ++i)
      values(Index(i), Index(j)) = rows[j][i];
  if (transpose) values.transposeInPlace();
  data.values = std::move(values);
  if (!transpose) data.feature_labels = std::move(header);
  return data;
}

}  // namespace plom
