#include "opnorm_rrr/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace rrr::kernels {

namespace {

constexpr Index kNnzPerBlock = 16384;
constexpr Index kMaxBlocks = 16;

Index block_begin(const SparseMatrix& m, Index blocks, Index b) {
  return m.rows() * b / blocks;
}

}  // namespace

Index transpose_blocks(const SparseMatrix& m) {
  const Index by_nnz = m.nnz() / kNnzPerBlock;
  return std::clamp<Index>(by_nnz, 1, std::min<Index>(kMaxBlocks, std::max<Index>(m.rows(), 1)));
}

void set_num_threads(int threads) { omp_set_num_threads(std::max(threads, 1)); }

int max_threads() { return omp_get_max_threads(); }

void spmv(const SparseMatrix& m, const double* x, double* y) {
  const Index* off = m.row_offsets().data();
  const Index* idx = m.col_indices().data();
  const double* val = m.values().data();
  const Index rows = m.rows();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    double s = 0.0;
    for (Index p = off[i]; p < off[i + 1]; ++p) s += val[p] * x[idx[p]];
    y[i] = s;
  }
}

void spmv_transpose(const SparseMatrix& m, const double* x, double* y) {
  const Index* off = m.row_offsets().data();
  const Index* idx = m.col_indices().data();
  const double* val = m.values().data();
  const Index cols = m.cols();
  const Index blocks = transpose_blocks(m);
  std::vector<double> partial(static_cast<std::size_t>(blocks * cols), 0.0);
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < blocks; ++b) {
    double* out = partial.data() + b * cols;
    for (Index i = block_begin(m, blocks, b); i < block_begin(m, blocks, b + 1); ++i) {
      const double xi = x[i];
      for (Index p = off[i]; p < off[i + 1]; ++p) out[idx[p]] += val[p] * xi;
    }
  }
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < cols; ++j) {
    double s = partial[j];
    for (Index b = 1; b < blocks; ++b) s += partial[b * cols + j];
    y[j] = s;
  }
}

void spmm(const SparseMatrix& m, const RowMajorMatrix& x, RowMajorMatrix& y) {
  const Index* off = m.row_offsets().data();
  const Index* idx = m.col_indices().data();
  const double* val = m.values().data();
  const Index rows = m.rows();
  const Index w = x.cols();
  y.resize(rows, w);
  const double* xd = x.data();
  double* yd = y.data();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    double* yi = yd + i * w;
    std::fill(yi, yi + w, 0.0);
    for (Index p = off[i]; p < off[i + 1]; ++p) {
      const double v = val[p];
      const double* xj = xd + idx[p] * w;
      for (Index c = 0; c < w; ++c) yi[c] += v * xj[c];
    }
  }
}

void spmm_transpose(const SparseMatrix& m, const RowMajorMatrix& x, RowMajorMatrix& y) {
  const Index* off = m.row_offsets().data();
  const Index* idx = m.col_indices().data();
  const double* val = m.values().data();
  const Index cols = m.cols();
  const Index w = x.cols();
  const Index blocks = transpose_blocks(m);
  y.setZero(cols, w);
  std::vector<double> partial(static_cast<std::size_t>((blocks - 1) * cols * w), 0.0);
  const double* xd = x.data();
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < blocks; ++b) {
    double* out = b == 0 ? y.data() : partial.data() + (b - 1) * cols * w;
    for (Index i = block_begin(m, blocks, b); i < block_begin(m, blocks, b + 1); ++i) {
      const double* xi = xd + i * w;
      for (Index p = off[i]; p < off[i + 1]; ++p) {
        const double v = val[p];
        double* oj = out + idx[p] * w;
        for (Index c = 0; c < w; ++c) oj[c] += v * xi[c];
      }
    }
  }
  if (blocks == 1) return;
  double* yd = y.data();
  const Index total = cols * w;
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < total; ++e) {
    double s = yd[e];
    for (Index b = 1; b < blocks; ++b) s += partial[(b - 1) * total + e];
    yd[e] = s;
  }
}

namespace reference {

void spmv(const SparseMatrix& m, const double* x, double* y) {
  const auto& off = m.row_offsets();
  const auto& idx = m.col_indices();
  const auto& val = m.values();
  for (Index i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (Index p = off[i]; p < off[i + 1]; ++p) s += val[p] * x[idx[p]];
    y[i] = s;
  }
}

void spmv_transpose(const SparseMatrix& m, const double* x, double* y) {
  const auto& off = m.row_offsets();
  const auto& idx = m.col_indices();
  const auto& val = m.values();
  std::fill(y, y + m.cols(), 0.0);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index p = off[i]; p < off[i + 1]; ++p) y[idx[p]] += val[p] * x[i];
}

void spmm(const SparseMatrix& m, const RowMajorMatrix& x, RowMajorMatrix& y) {
  y.setZero(m.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    Vector xc = x.col(c);
    Vector yc(m.rows());
    reference::spmv(m, xc.data(), yc.data());
    y.col(c) = yc;
  }
}

void spmm_transpose(const SparseMatrix& m, const RowMajorMatrix& x, RowMajorMatrix& y) {
  y.setZero(m.cols(), x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    Vector xc = x.col(c);
    Vector yc(m.cols());
    reference::spmv_transpose(m, xc.data(), yc.data());
    y.col(c) = yc;
  }
}

}  // namespace reference

}  // namespace rrr::kernels
