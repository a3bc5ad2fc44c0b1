#include "opnorm_rrr/generators.hpp"

#include "opnorm_rrr/dense_ops.hpp"

#include <random>
#include <string>
#include <vector>

namespace rrr {

RegressionInstance intro_example(double gamma) {
  DenseMatrix a(3, 2), b(3, 2);
  a << 0, 0, 1, 0, 0, 1;
  b << 1, 0, 1, 0, 0, 1 + gamma;
  return {SparseMatrix::from_dense(a), SparseMatrix::from_dense(b)};
}

RegressionInstance sparse_uniform(Index n, Index d, Index c, double density, std::uint64_t seed) {
  if (n < 1 || d < 1 || c < 1 || c > d)
    throw InvalidArgument("sparse_uniform: need n, d >= 1 and 1 <= c <= d");
  if (!(density > 0.0 && density <= 1.0))
    throw InvalidArgument("sparse_uniform: density must lie in (0, 1]");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Index> offsets(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(static_cast<std::size_t>(density * static_cast<double>(n * d) * 1.1));
  vals.reserve(cols.capacity());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      if (unit(gen) < density) {
        double v = unit(gen);
        while (v == 0.0) v = unit(gen);
        cols.push_back(j);
        vals.push_back(v);
      }
    }
    offsets[i + 1] = static_cast<Index>(vals.size());
  }
  SparseMatrix b(n, d, std::move(offsets), std::move(cols), std::move(vals));
  return {b.leading_columns(c), b};
}

RegressionInstance random_dense(Index n, Index c, Index d, std::uint64_t seed) {
  if (n < 1 || c < 1 || d < 1) throw InvalidArgument("random_dense: dimensions must be >= 1");
  return {SparseMatrix::from_dense(gaussian_matrix(n, c, derive_seed(seed, 1))),
          SparseMatrix::from_dense(gaussian_matrix(n, d, derive_seed(seed, 2)))};
}

}  // namespace rrr
