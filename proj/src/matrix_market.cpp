#include "opnorm_rrr/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace rrr {

namespace {

struct Header {
  bool coordinate = true;
  Index rows = 0;
  Index cols = 0;
  Index entries = 0;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw IoError("cannot open " + path);
  }

  // Next line that is not a comment or blank; false at end of file.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '%') continue;
      return true;
    }
    return false;
  }

  Header header() {
    std::string line;
    if (!std::getline(in_, line)) fail("empty file");
    ++line_no_;
    std::istringstream ss(line);
    std::string banner, object, format, field, symmetry;
    ss >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") fail("missing %%MatrixMarket banner");
    if (lower(object) != "matrix") fail("unsupported object '" + object + "'");
    Header h;
    format = lower(format);
    if (format == "coordinate") {
      h.coordinate = true;
    } else if (format == "array") {
      h.coordinate = false;
    } else {
      fail("unsupported format '" + format + "'");
    }
    field = lower(field);
    if (field != "real" && field != "integer" && field != "double")
      fail("unsupported field '" + field + "'");
    if (lower(symmetry) != "general") fail("unsupported symmetry '" + symmetry + "'");

    if (!next(line)) fail("missing size line");
    std::istringstream sz(line);
    if (h.coordinate) {
      if (!(sz >> h.rows >> h.cols >> h.entries)) fail("malformed size line");
    } else {
      if (!(sz >> h.rows >> h.cols)) fail("malformed size line");
      h.entries = h.rows * h.cols;
    }
    if (h.rows < 0 || h.cols < 0 || h.entries < 0) fail("negative size");
    return h;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

double parse_value(Reader& r, std::istringstream& ss) {
  double v;
  if (!(ss >> v)) r.fail("malformed value");
  return v;
}

DenseMatrix read_array_body(Reader& r, const Header& h) {
  DenseMatrix m(h.rows, h.cols);
  std::string line;
  for (Index e = 0; e < h.entries; ++e) {
    if (!r.next(line)) r.fail("expected " + std::to_string(h.entries) + " values, found " +
                              std::to_string(e));
    std::istringstream ss(line);
    m(e % h.rows, e / h.rows) = parse_value(r, ss);
  }
  if (r.next(line)) r.fail("more values than declared");
  return m;
}

void write_double(std::FILE* f, double v) { std::fprintf(f, "%.17g", v); }

std::FILE* open_out(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  return f;
}

void close_out(std::FILE* f, const std::string& path) {
  const bool bad = std::ferror(f) != 0;
  if (std::fclose(f) != 0 || bad) throw IoError("error writing " + path);
}

}  // namespace

SparseMatrix read_matrix_market(const std::string& path) {
  Reader r(path);
  const Header h = r.header();
  if (!h.coordinate) return SparseMatrix::from_dense(read_array_body(r, h));

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(h.entries));
  std::string line;
  for (Index e = 0; e < h.entries; ++e) {
    if (!r.next(line)) r.fail("expected " + std::to_string(h.entries) + " entries, found " +
                              std::to_string(e));
    std::istringstream ss(line);
    long long i, j;
    if (!(ss >> i >> j)) r.fail("malformed entry");
    if (i < 1 || i > h.rows || j < 1 || j > h.cols)
      r.fail("entry (" + std::to_string(i) + "," + std::to_string(j) + ") out of bounds for " +
             std::to_string(h.rows) + "x" + std::to_string(h.cols));
    triplets.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), parse_value(r, ss)});
  }
  if (r.next(line)) r.fail("more entries than declared");
  try {
    return SparseMatrix::from_triplets(h.rows, h.cols, std::move(triplets));
  } catch (const InvalidArgument& e) {
    throw ParseError(path, r.line_no(), e.what());
  }
}

DenseMatrix read_dense_matrix_market(const std::string& path) {
  Reader r(path);
  const Header h = r.header();
  if (!h.coordinate) return read_array_body(r, h);
  return read_matrix_market(path).to_dense();
}

void write_matrix_market(const SparseMatrix& m, const std::string& path) {
  std::FILE* f = open_out(path);
  std::fprintf(f, "%%%%MatrixMarket matrix coordinate real general\n");
  std::fprintf(f, "%lld %lld %lld\n", static_cast<long long>(m.rows()),
               static_cast<long long>(m.cols()), static_cast<long long>(m.nnz()));
  const auto& off = m.row_offsets();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index p = off[i]; p < off[i + 1]; ++p) {
      std::fprintf(f, "%lld %lld ", static_cast<long long>(i + 1),
                   static_cast<long long>(m.col_indices()[p] + 1));
      write_double(f, m.values()[p]);
      std::fputc('\n', f);
    }
  }
  close_out(f, path);
}

void write_dense_matrix_market(const DenseMatrix& m, const std::string& path) {
  std::FILE* f = open_out(path);
  std::fprintf(f, "%%%%MatrixMarket matrix array real general\n");
  std::fprintf(f, "%lld %lld\n", static_cast<long long>(m.rows()),
               static_cast<long long>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      write_double(f, m(i, j));
      std::fputc('\n', f);
    }
  }
  close_out(f, path);
}

}  // namespace rrr
