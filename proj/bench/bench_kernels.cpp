// Serial reference kernels against the parallel ones. The thread count is the
// benchmark argument; the parallel results are identical for every count.

#include "opnorm_rrr/generators.hpp"
#include "opnorm_rrr/kernels.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using rrr::Index;
using rrr::RowMajorMatrix;
using rrr::SparseMatrix;

constexpr Index kRows = 20000;
constexpr Index kCols = 2000;
constexpr Index kBlock = 32;

const SparseMatrix& matrix() {
  static const SparseMatrix m = rrr::sparse_uniform(kRows, kCols, kCols, 0.01, 42).B;
  return m;
}

RowMajorMatrix block(Index rows) { return RowMajorMatrix::Ones(rows, kBlock); }

template <auto Kernel, bool Transpose>
void vector_kernel(benchmark::State& state) {
  const SparseMatrix& m = matrix();
  rrr::kernels::set_num_threads(static_cast<int>(state.range(0)));
  std::vector<double> x(Transpose ? kRows : kCols, 1.0), y(Transpose ? kCols : kRows);
  for (auto _ : state) {
    Kernel(m, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * m.nnz());
}

template <auto Kernel, bool Transpose>
void block_kernel(benchmark::State& state) {
  const SparseMatrix& m = matrix();
  rrr::kernels::set_num_threads(static_cast<int>(state.range(0)));
  const RowMajorMatrix x = block(Transpose ? kRows : kCols);
  RowMajorMatrix y(Transpose ? kCols : kRows, kBlock);
  for (auto _ : state) {
    Kernel(m, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * m.nnz() * kBlock);
}

void thread_counts(benchmark::internal::Benchmark* b) {
  b->Arg(1);
  if (rrr::kernels::max_threads() > 1) b->Arg(rrr::kernels::max_threads());
}

}  // namespace

namespace ref = rrr::kernels::reference;
namespace par = rrr::kernels;

BENCHMARK(vector_kernel<ref::spmv, false>)->Name("spmv/reference")->Arg(1);
BENCHMARK(vector_kernel<par::spmv, false>)->Name("spmv/parallel")->Apply(thread_counts);
BENCHMARK(vector_kernel<ref::spmv_transpose, true>)->Name("spmv_transpose/reference")->Arg(1);
BENCHMARK(vector_kernel<par::spmv_transpose, true>)->Name("spmv_transpose/parallel")->Apply(thread_counts);
BENCHMARK(block_kernel<ref::spmm, false>)->Name("spmm/reference")->Arg(1);
BENCHMARK(block_kernel<par::spmm, false>)->Name("spmm/parallel")->Apply(thread_counts);
BENCHMARK(block_kernel<ref::spmm_transpose, true>)->Name("spmm_transpose/reference")->Arg(1);
BENCHMARK(block_kernel<par::spmm_transpose, true>)->Name("spmm_transpose/parallel")->Apply(thread_counts);

BENCHMARK_MAIN();
