#include "cli_commands.hpp"

#include "opnorm_rrr/dense_ops.hpp"
#include "opnorm_rrr/exact_reference.hpp"
#include "opnorm_rrr/generators.hpp"
#include "opnorm_rrr/kernels.hpp"
#include "opnorm_rrr/matrix_market.hpp"
#include "opnorm_rrr/rrr_solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace rrr::cli {

namespace {

// Largest instance (rows and columns) handed to the dense reference.
constexpr Index kExactLimit = 500;
// Largest instance the bench command runs the dense pipeline on by default.
constexpr Index kBenchDenseLimit = 4000;
constexpr int kCostSteps = 100;

struct UsageError : Error {
  using Error::Error;
};

struct CommonOptions {
  std::string a_path;
  std::string b_path;
  Index k = 1;
  double epsilon = 0.1;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string regularize = "auto";
  int degree_cap = 60;
  bool no_exact = false;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("OPNORM_RRR_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw UsageError(std::string("OPNORM_RRR_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool with_files = true) {
  if (with_files) {
    cmd->add_option("A", o.a_path, "Matrix Market file for A (n x c)")->required();
    cmd->add_option("B", o.b_path, "Matrix Market file for B (n x d)")->required();
  }
  cmd->add_option("--k", o.k, "target rank")->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", o.epsilon, "accuracy parameter in (0, 1/2]");
  cmd->add_option("--seed", o.seed, "base seed (falls back to OPNORM_RRR_SEED, then 0)");
  cmd->add_option("--threads", o.threads, "thread cap for sparse kernels")->check(CLI::PositiveNumber);
  cmd->add_option("--regularize", o.regularize, "auto, on or off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  cmd->add_option("--degree-cap", o.degree_cap, "maximum degree of the inverse square root polynomial")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-exact", o.no_exact, "skip the dense reference computations");
}

OpNormRRRConfig make_config(const CommonOptions& o, std::uint64_t seed) {
  OpNormRRRConfig cfg;
  cfg.k = o.k;
  cfg.epsilon = o.epsilon;
  cfg.seed = seed;
  cfg.degree_cap = o.degree_cap;
  cfg.regularize = o.regularize == "on"    ? RegularizeMode::On
                   : o.regularize == "off" ? RegularizeMode::Off
                                           : RegularizeMode::Auto;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct LoadedInstance {
  SparseMatrix A;
  SparseMatrix B;
};

LoadedInstance load_checked(const CommonOptions& o) {
  LoadedInstance inst{read_matrix_market(o.a_path), read_matrix_market(o.b_path)};
  if (inst.A.rows() != inst.B.rows())
    throw DimensionError("A has " + std::to_string(inst.A.rows()) + " rows but B has " +
                         std::to_string(inst.B.rows()));
  if (inst.A.rows() < inst.A.cols())
    throw DimensionError("A must have at least as many rows as columns");
  if (o.k > inst.A.cols() || o.k > inst.B.cols())
    throw UsageError("--k " + std::to_string(o.k) + " exceeds min(c, d) = " +
                     std::to_string(std::min(inst.A.cols(), inst.B.cols())));
  return inst;
}

bool exact_allowed(const LoadedInstance& inst, const CommonOptions& o) {
  return !o.no_exact && inst.A.rows() <= kExactLimit && inst.B.cols() <= kExactLimit;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ‖A·X − B‖ for a dense coefficient matrix X, by Rayleigh–Ritz on the residual.
double residual_norm(const SparseMatrix& A, const SparseMatrix& B, const DenseMatrix& X,
                     std::uint64_t seed) {
  MatVecOracle op;
  op.rows = B.rows();
  op.cols = B.cols();
  op.apply = [&](const DenseMatrix& v, double) -> DenseMatrix {
    return multiply(A, X * v) - multiply(B, v);
  };
  op.apply_transpose = [&](const DenseMatrix& u, double) -> DenseMatrix {
    return X.transpose() * multiply_transpose(A, u) - multiply_transpose(B, u);
  };
  const int steps = static_cast<int>(std::min<Index>({op.rows, op.cols, kCostSteps}));
  return estimate_spectral_norm(op, steps, seed);
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

int cmd_solve(const CommonOptions& o, const std::string& out_dir) {
  const std::uint64_t seed = resolve_seed(o.seed);
  const OpNormRRRConfig cfg = make_config(o, seed);
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedInstance inst = load_checked(o);
  const double load_time = seconds_since(t0);
  ensure_dir(out_dir);

  const RRRSolution sol = solve_rrr(inst.A, inst.B, cfg);
  const std::filesystem::path dir(out_dir);
  write_dense_matrix_market(sol.Z, (dir / "Z.mtx").string());
  write_dense_matrix_market(sol.X_left, (dir / "X_left.mtx").string());
  write_dense_matrix_market(sol.X_right, (dir / "X_right.mtx").string());

  nlohmann::json report;
  report["command"] = "solve";
  report["config"] = sol.diagnostics["config"];
  report["config"]["threads"] = o.threads;
  report["beta"] = sol.beta;
  report["cost_estimate"] = sol.cost_estimate;
  report["wall_clock_by_phase"] = sol.diagnostics["wall_clock"];
  report["wall_clock_by_phase"]["load"] = load_time;
  report["seeds"] = sol.diagnostics["seeds"];
  report["diagnostics"] = sol.diagnostics;
  if (exact_allowed(inst, o)) {
    const DenseRRRInstance dense{inst.A.to_dense(), inst.B.to_dense(), o.k};
    report["opt_value"] = opt_value(dense);
  }
  write_json(report, dir / "report.json");
  std::printf("cost_estimate %.12g\nbeta %.12g\n", sol.cost_estimate, sol.beta);
  return kOk;
}

int cmd_compare(const CommonOptions& o) {
  const std::uint64_t seed = resolve_seed(o.seed);
  const OpNormRRRConfig cfg = make_config(o, seed);
  const LoadedInstance inst = load_checked(o);
  if (!o.no_exact && !exact_allowed(inst, o))
    throw UsageError("instance exceeds " + std::to_string(kExactLimit) +
                     " rows or columns; pass --no-exact");
  const RRRSolution sol = solve_rrr(inst.A, inst.B, cfg);
  std::printf("%-18s %.12g\n", "fast_cost", sol.cost_estimate);
  if (o.no_exact) return kOk;

  const DenseRRRInstance dense{inst.A.to_dense(), inst.B.to_dense(), o.k};
  const double opt = opt_value(dense);
  const FrobeniusSolution fro = frobenius_rrr(dense);
  std::printf("%-18s %.12g\n", "opt_value", opt);
  std::printf("%-18s %.12g\n", "frobenius_cost_op", fro.cost_op);
  if (opt > 0.0) {
    std::printf("%-18s %.12g\n", "ratio_frobenius", fro.cost_op / opt);
    std::printf("%-18s %.12g\n", "ratio_fast", sol.cost_estimate / opt);
  } else {
    std::printf("%-18s %s\n", "ratio_frobenius", "undefined (opt = 0)");
    std::printf("%-18s %s\n", "ratio_fast", "undefined (opt = 0)");
  }
  return kOk;
}

struct GenOptions {
  std::string kind;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  double gamma = 0.1;
  Index n = 100;
  Index d = 100;
  Index c = 10;
  double density = 0.05;
};

int cmd_gen(const GenOptions& g) {
  const std::uint64_t seed = resolve_seed(g.seed);
  RegressionInstance inst;
  try {
    if (g.kind == "intro_example") {
      inst = intro_example(g.gamma);
    } else if (g.kind == "sparse_uniform") {
      inst = sparse_uniform(g.n, g.d, g.c, g.density, seed);
    } else {
      inst = random_dense(g.n, g.c, g.d, seed);
    }
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  ensure_dir(g.out_dir);
  const std::filesystem::path dir(g.out_dir);
  write_matrix_market(inst.A, (dir / "A.mtx").string());
  write_matrix_market(inst.B, (dir / "B.mtx").string());
  std::printf("wrote %s and %s (n=%lld, c=%lld, d=%lld, nnz(B)=%lld)\n",
              (dir / "A.mtx").c_str(), (dir / "B.mtx").c_str(),
              static_cast<long long>(inst.A.rows()), static_cast<long long>(inst.A.cols()),
              static_cast<long long>(inst.B.cols()), static_cast<long long>(inst.B.nnz()));
  return kOk;
}

int cmd_bench(const CommonOptions& o, int repetitions, const std::string& csv_path) {
  const std::uint64_t seed = resolve_seed(o.seed);
  const OpNormRRRConfig cfg = make_config(o, seed);
  const LoadedInstance inst = load_checked(o);
  const bool dense_ok =
      !o.no_exact && inst.A.rows() <= kBenchDenseLimit && inst.B.cols() <= kBenchDenseLimit;

  std::ofstream file;
  if (!csv_path.empty()) {
    file.open(csv_path);
    if (!file) throw IoError("cannot write " + csv_path);
  }
  std::ostream& out = csv_path.empty() ? std::cout : file;
  out << "# opnorm_rrr bench csv v1\n";
  out << "method,repetition,wall_clock_s,cost\n";
  char line[256];
  const std::uint64_t cost_seed = derive_seed(seed, 0xc057);
  for (int rep = 0; rep < repetitions; ++rep) {
    auto t0 = std::chrono::steady_clock::now();
    const RRRSolution sol = solve_rrr(inst.A, inst.B, cfg);
    const double fast_time = seconds_since(t0);
    const double fast_cost = residual_norm(inst.A, inst.B, sol.X_left * sol.X_right, cost_seed);
    std::snprintf(line, sizeof line, "fast,%d,%.6f,%.12g\n", rep, fast_time, fast_cost);
    out << line;
    if (dense_ok) {
      t0 = std::chrono::steady_clock::now();
      const DenseRRRInstance dense{inst.A.to_dense(), inst.B.to_dense(), o.k};
      const DensePipelineResult res = sou_rantzer_pipeline(dense, o.epsilon);
      const double dense_time = seconds_since(t0);
      const double dense_cost = residual_norm(inst.A, inst.B, res.X, cost_seed);
      std::snprintf(line, sizeof line, "dense,%d,%.6f,%.12g\n", rep, dense_time, dense_cost);
      out << line;
    }
    out.flush();
  }
  if (!out) throw IoError("failed writing " + (csv_path.empty() ? "stdout" : csv_path));
  return kOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Operator-norm reduced-rank regression"};
  app.require_subcommand(1);

  CommonOptions solve_opts;
  std::string out_dir = "out";
  auto* solve = app.add_subcommand("solve", "solve min rank-k ||AX - B|| from Matrix Market files");
  add_common(solve, solve_opts);
  solve->add_option("--out", out_dir, "output directory");

  CommonOptions compare_opts;
  auto* compare = app.add_subcommand("compare", "compare the fast solver with Frobenius and exact optima");
  add_common(compare, compare_opts);

  GenOptions gen_opts;
  auto* gen = app.add_subcommand("gen", "write synthetic A.mtx and B.mtx");
  gen->add_option("kind", gen_opts.kind, "intro_example, sparse_uniform or random_dense")
      ->required()
      ->check(CLI::IsMember({"intro_example", "sparse_uniform", "random_dense"}));
  gen->add_option("--out", gen_opts.out_dir, "output directory");
  gen->add_option("--seed", gen_opts.seed, "seed");
  gen->add_option("--gamma", gen_opts.gamma, "intro_example parameter");
  gen->add_option("--n", gen_opts.n, "rows")->check(CLI::PositiveNumber);
  gen->add_option("--d", gen_opts.d, "columns of B")->check(CLI::PositiveNumber);
  gen->add_option("--c", gen_opts.c, "columns of A")->check(CLI::PositiveNumber);
  gen->add_option("--density", gen_opts.density, "fraction of nonzeros in B");

  CommonOptions bench_opts;
  int repetitions = 1;
  std::string csv_path;
  auto* bench = app.add_subcommand("bench", "time the fast solver against the dense pipeline");
  add_common(bench, bench_opts);
  bench->add_option("--repetitions", repetitions, "runs per method")->check(CLI::PositiveNumber);
  bench->add_option("--out", csv_path, "CSV output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) {
      kernels::set_num_threads(solve_opts.threads);
      return cmd_solve(solve_opts, out_dir);
    }
    if (*compare) {
      kernels::set_num_threads(compare_opts.threads);
      return cmd_compare(compare_opts);
    }
    if (*gen) return cmd_gen(gen_opts);
    kernels::set_num_threads(bench_opts.threads);
    return cmd_bench(bench_opts, repetitions, csv_path);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIo;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIo;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "dimension error: %s\n", e.what());
    return kDimension;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kSolver;
  } catch (const CertificationError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kSolver;
  } catch (const KrylovRankError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kSolver;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
}

}  // namespace rrr::cli
