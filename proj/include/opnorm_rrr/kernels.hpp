#pragma once

#include "opnorm_rrr/sparse_matrix.hpp"

namespace rrr::kernels {

// Parallel kernels. Output does not depend on the thread count: rows are
// reduced in storage order, and the transpose products use a fixed block
// partition whose partial sums are combined in block order.
void spmv(const SparseMatrix& m, const double* x, double* y);
void spmv_transpose(const SparseMatrix& m, const double* x, double* y);
void spmm(const SparseMatrix& m, const RowMajorMatrix& x, RowMajorMatrix& y);
void spmm_transpose(const SparseMatrix& m, const RowMajorMatrix& x, RowMajorMatrix& y);

// Number of row blocks used by the transpose kernels for this matrix.
Index transpose_blocks(const SparseMatrix& m);

void set_num_threads(int threads);
int max_threads();

namespace reference {
// Plain serial loops, kept as the test baseline.
void spmv(const SparseMatrix& m, const double* x, double* y);
void spmv_transpose(const SparseMatrix& m, const double* x, double* y);
void spmm(const SparseMatrix& m, const RowMajorMatrix& x, RowMajorMatrix& y);
void spmm_transpose(const SparseMatrix& m, const RowMajorMatrix& x, RowMajorMatrix& y);
}  // namespace reference

}  // namespace rrr::kernels
