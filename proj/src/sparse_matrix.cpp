#include "opnorm_rrr/sparse_matrix.hpp"

#include "opnorm_rrr/kernels.hpp"

#include <algorithm>
#include <string>

namespace rrr {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SparseMatrix::SparseMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), row_offsets_(static_cast<std::size_t>(rows) + 1, 0) {
  if (rows < 0 || cols < 0) throw InvalidArgument("negative matrix dimension");
}

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (rows < 0 || cols < 0) throw InvalidArgument("negative matrix dimension");
  if (row_offsets_.size() != static_cast<std::size_t>(rows) + 1)
    throw InvalidArgument("row_offsets must have rows+1 entries");
  if (col_indices_.size() != values_.size())
    throw InvalidArgument("col_indices and values differ in length");
  if (row_offsets_.front() != 0 || row_offsets_.back() != nnz())
    throw InvalidArgument("row_offsets must start at 0 and end at nnz");
  for (Index i = 0; i < rows_; ++i) {
    const Index begin = row_offsets_[i];
    const Index end = row_offsets_[i + 1];
    if (end < begin) throw InvalidArgument("row_offsets must be nondecreasing");
    for (Index p = begin; p < end; ++p) {
      const Index j = col_indices_[p];
      if (j < 0 || j >= cols_)
        throw InvalidArgument("column index out of range in row " + std::to_string(i));
      if (p > begin && col_indices_[p - 1] >= j)
        throw InvalidArgument("column indices must be strictly increasing in row " +
                              std::to_string(i));
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw InvalidArgument("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                            ") out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<Index> offsets(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals;
  cols_out.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t p = 0; p < triplets.size(); ++p) {
    const auto& t = triplets[p];
    if (p > 0 && triplets[p - 1].row == t.row && triplets[p - 1].col == t.col)
      throw InvalidArgument("duplicate entry (" + std::to_string(t.row) + "," +
                            std::to_string(t.col) + ")");
    ++offsets[t.row + 1];
    cols_out.push_back(t.col);
    vals.push_back(t.value);
  }
  for (Index i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];
  return SparseMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& m) {
  std::vector<Index> offsets(static_cast<std::size_t>(m.rows()) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        cols_out.push_back(j);
        vals.push_back(m(i, j));
      }
    }
    offsets[i + 1] = static_cast<Index>(vals.size());
  }
  return SparseMatrix(m.rows(), m.cols(), std::move(offsets), std::move(cols_out),
                      std::move(vals));
}

SparseMatrix SparseMatrix::identity(Index n) {
  std::vector<Index> offsets(static_cast<std::size_t>(n) + 1);
  std::vector<Index> cols_out(static_cast<std::size_t>(n));
  for (Index i = 0; i <= n; ++i) offsets[i] = i;
  for (Index i = 0; i < n; ++i) cols_out[i] = i;
  return SparseMatrix(n, n, std::move(offsets), std::move(cols_out),
                      std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out = DenseMatrix::Zero(rows_, cols_);
  for (Index i = 0; i < rows_; ++i)
    for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p)
      out(i, col_indices_[p]) = values_[p];
  return out;
}

SparseMatrix SparseMatrix::leading_columns(Index count) const {
  if (count < 0 || count > cols_) throw DimensionError("leading_columns: count out of range");
  std::vector<Index> offsets(static_cast<std::size_t>(rows_) + 1, 0);
  std::vector<Index> cols_out;
  std::vector<double> vals;
  for (Index i = 0; i < rows_; ++i) {
    for (Index p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      if (col_indices_[p] < count) {
        cols_out.push_back(col_indices_[p]);
        vals.push_back(values_[p]);
      }
    }
    offsets[i + 1] = static_cast<Index>(vals.size());
  }
  return SparseMatrix(rows_, count, std::move(offsets), std::move(cols_out), std::move(vals));
}

namespace {

void check_cols(const SparseMatrix& m, Index len, const char* what) {
  if (len != m.cols())
    throw DimensionError(std::string(what) + ": expected " + std::to_string(m.cols()) +
                         " rows in operand, got " + std::to_string(len));
}

void check_rows(const SparseMatrix& m, Index len, const char* what) {
  if (len != m.rows())
    throw DimensionError(std::string(what) + ": expected " + std::to_string(m.rows()) +
                         " rows in operand, got " + std::to_string(len));
}

}  // namespace

Vector spmv(const SparseMatrix& m, const Vector& v) {
  check_cols(m, v.size(), "spmv");
  Vector y(m.rows());
  kernels::spmv(m, v.data(), y.data());
  return y;
}

Vector spmv_transpose(const SparseMatrix& m, const Vector& v) {
  check_rows(m, v.size(), "spmv_transpose");
  Vector y(m.cols());
  kernels::spmv_transpose(m, v.data(), y.data());
  return y;
}

DenseMatrix multiply(const SparseMatrix& m, const DenseMatrix& x) {
  check_cols(m, x.rows(), "multiply");
  if (x.cols() == 1) {
    DenseMatrix y(m.rows(), 1);
    kernels::spmv(m, x.data(), y.data());
    return y;
  }
  RowMajorMatrix xr = x;
  RowMajorMatrix yr(m.rows(), x.cols());
  kernels::spmm(m, xr, yr);
  return yr;
}

DenseMatrix multiply_transpose(const SparseMatrix& m, const DenseMatrix& x) {
  check_rows(m, x.rows(), "multiply_transpose");
  if (x.cols() == 1) {
    DenseMatrix y(m.cols(), 1);
    kernels::spmv_transpose(m, x.data(), y.data());
    return y;
  }
  RowMajorMatrix xr = x;
  RowMajorMatrix yr(m.cols(), x.cols());
  kernels::spmm_transpose(m, xr, yr);
  return yr;
}

DenseMatrix gram(const SparseMatrix& m) {
  DenseMatrix g = DenseMatrix::Zero(m.cols(), m.cols());
  const auto& off = m.row_offsets();
  const auto& idx = m.col_indices();
  const auto& val = m.values();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index p = off[i]; p < off[i + 1]; ++p) {
      const double vp = val[p];
      for (Index s = off[i]; s < off[i + 1]; ++s) g(idx[s], idx[p]) += val[s] * vp;
    }
  }
  return g;
}

}  // namespace rrr
