#pragma once

#include "opnorm_rrr/sparse_matrix.hpp"

#include <string>

namespace rrr {

// Reads "matrix coordinate|array real|integer general". Array files are
// returned with zero entries dropped.
SparseMatrix read_matrix_market(const std::string& path);
DenseMatrix read_dense_matrix_market(const std::string& path);

// Values are written with 17 significant digits.
void write_matrix_market(const SparseMatrix& m, const std::string& path);
void write_dense_matrix_market(const DenseMatrix& m, const std::string& path);

}  // namespace rrr
