#include "ipca/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ipca {

namespace {

constexpr char kMagic[5] = {'I', 'P', 'C', 'A', '1'};
constexpr unsigned char kDtypeF64 = 0x01;
constexpr unsigned char kOrderRowMajor = 0x00;

void put_u64_le(std::ostream& out, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t get_u64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out.write(kMagic, 5);
  out.put(static_cast<char>(kDtypeF64));
  out.put(static_cast<char>(kOrderRowMajor));
  out.put(0);
  put_u64_le(out, static_cast<uint64_t>(m.rows()));
  put_u64_le(out, static_cast<uint64_t>(m.cols()));
  // payload is row-major
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      static_assert(sizeof(double) == 8);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
  if (!out) throw ParseError("short write to " + path.string());
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kMagic, 5) != 0) {
    throw ParseError(path.string() + ": bad container magic");
  }
  const int dtype = in.get();
  const int order = in.get();
  in.get();  // reserved
  if (dtype != kDtypeF64) throw ParseError(path.string() + ": unsupported dtype");
  if (order != kOrderRowMajor) throw ParseError(path.string() + ": unsupported order");
  const uint64_t rows = get_u64_le(in);
  const uint64_t cols = get_u64_le(in);
  if (!in) throw ParseError(path.string() + ": truncated header");
  if (rows > (1ull << 32) || cols > (1ull << 32)) {
    throw ParseError(path.string() + ": implausible matrix shape");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      m(r, c) = v;
    }
  }
  if (!in) throw ParseError(path.string() + ": payload shorter than header claims");
  // must be exactly rows*cols values
  in.peek();
  if (!in.eof()) throw ParseError(path.string() + ": payload longer than header claims");
  return m;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& columns, const Eigen::MatrixXd& m) {
  if (static_cast<Eigen::Index>(columns.size()) != m.cols()) {
    throw DimensionMismatch("csv header has " + std::to_string(columns.size()) +
                            " names for " + std::to_string(m.cols()) + " columns");
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (size_t i = 0; i < columns.size(); ++i) {
    out << columns[i] << (i + 1 < columns.size() ? ',' : '\n');
  }
  char buf[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      out << buf << (c + 1 < m.cols() ? ',' : '\n');
    }
  }
}

Eigen::MatrixXd read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty csv");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": bad cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ": ragged csv");
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace ipca
