#pragma once

#include "opnorm_rrr/common.hpp"

#include <vector>

namespace rrr {

struct Triplet {
  Index row;
  Index col;
  double value;
};

// Compressed sparse row storage. Immutable after construction.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols);
  // Validates the CSR arrays; throws InvalidArgument on any violation.
  SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
               std::vector<Index> col_indices, std::vector<double> values);

  // Duplicate (row, col) pairs are rejected; explicit zeros are kept.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const DenseMatrix& m);
  static SparseMatrix identity(Index n);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  DenseMatrix to_dense() const;
  // First `count` columns as a new matrix.
  SparseMatrix leading_columns(Index count) const;

  bool operator==(const SparseMatrix& other) const = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

Vector spmv(const SparseMatrix& m, const Vector& v);
Vector spmv_transpose(const SparseMatrix& m, const Vector& v);
DenseMatrix multiply(const SparseMatrix& m, const DenseMatrix& x);
DenseMatrix multiply_transpose(const SparseMatrix& m, const DenseMatrix& x);

// Gram matrix MᵀM accumulated row by row.
DenseMatrix gram(const SparseMatrix& m);

}  // namespace rrr
