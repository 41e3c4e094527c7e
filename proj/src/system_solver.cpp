#include "signlab/system_solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include <Eigen/SparseLU>

#include "signlab/error.hpp"

namespace signlab {

SystemProblem make_problem(CouplingMatrix cm, double mu, std::vector<GridFunction> f, DomainSpectrum spectrum) {
  if (static_cast<int>(f.size()) != cm.size()) {
    throw ConfigError("component_count", "number of source components does not match the matrix size");
  }
  for (const GridFunction& fi : f) {
    if (!(fi.grid() == spectrum.grid())) throw ConfigError("grid_mismatch", "source lives on another grid");
  }
  for (int k = 0; k < cm.size(); ++k) {
    const double shift = cm.eigenvalues()(k) + mu;
    if (spectrum.grid().distance_to_spectrum(shift) < DirichletLaplacian::kShiftExclusion) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "mu = " << mu << " puts xi_" << k + 1 << " + mu on the discrete spectrum";
      throw NearSingularShift(msg.str());
    }
  }
  return SystemProblem{std::move(cm), mu, std::move(f), std::move(spectrum)};
}

std::vector<GridFunction> combine(const Matrix& m, const std::vector<GridFunction>& in) {
  std::vector<GridFunction> out;
  out.reserve(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    GridFunction acc(in.front().grid());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) acc.add_scaled(m(i, j), in[j]);
    }
    out.push_back(std::move(acc));
  }
  return out;
}

std::vector<GridFunction> transform_source(const CouplingMatrix& cm, const std::vector<GridFunction>& f) {
  if (static_cast<int>(f.size()) != cm.size()) {
    throw ConfigError("component_count", "number of source components does not match the matrix size");
  }
  return combine(cm.p_inv(), f);
}

void measure_residual(const SystemProblem& problem, SystemSolution& solution) {
  const Matrix& a = problem.cm.entries();
  const int n = problem.cm.size();
  double residual = 0.0;
  double u_max = 0.0;
  double f_max = 0.0;
  for (int i = 0; i < n; ++i) {
    GridFunction r = apply_neg_laplacian(solution.u[i]);
    r.add_scaled(-problem.mu, solution.u[i]);
    for (int j = 0; j < n; ++j) r.add_scaled(-a(i, j), solution.u[j]);
    r -= problem.f[i];
    residual = std::max(residual, r.max_abs());
    u_max = std::max(u_max, solution.u[i].max_abs());
    f_max = std::max(f_max, problem.f[i].max_abs());
  }
  const double op_norm = problem.spectrum.laplacian->norm_inf() + std::abs(problem.mu) +
                         a.cwiseAbs().rowwise().sum().maxCoeff();
  const double denom = op_norm * u_max + f_max;
  solution.residual = residual;
  solution.backward_error = denom > 0.0 ? residual / denom : 0.0;
}

SystemSolution solve_jordan(const SystemProblem& problem) {
  const CouplingMatrix& cm = problem.cm;
  const std::vector<GridFunction> f_tilde = transform_source(cm, problem.f);
  std::vector<GridFunction> u_tilde(cm.size());

  // Blocks are independent; inside a block equation j picks up u~_{j-1}
  // through the unit subdiagonal of J.
  auto solve_block = [&](const JordanBlock& block) {
    const double sigma = block.eigenvalue + problem.mu;
    for (int j = 0; j < block.size; ++j) {
      const int row = block.start + j;
      GridFunction rhs = f_tilde[row];
      if (j > 0) rhs += u_tilde[row - 1];
      u_tilde[row] = solve_shifted(sigma, rhs, problem.spectrum);
    }
  };
  const auto& blocks = cm.blocks();
  if (blocks.size() == 1) {
    solve_block(blocks.front());
  } else {
    std::vector<std::future<void>> pending;
    pending.reserve(blocks.size());
    for (const JordanBlock& b : blocks) pending.push_back(std::async(std::launch::async, solve_block, b));
    for (auto& p : pending) p.get();
  }

  SystemSolution out;
  out.method = "jordan";
  out.u = combine(cm.p(), u_tilde);
  out.u_tilde = std::move(u_tilde);
  measure_residual(problem, out);
  return out;
}

SystemSolution solve_direct(const SystemProblem& problem) {
  using SparseMatrix = Eigen::SparseMatrix<double>;
  const CouplingMatrix& cm = problem.cm;
  const int n = cm.size();
  const Matrix& a = cm.entries();
  const SparseMatrix& lap = problem.spectrum.laplacian->matrix();
  const int nodes = static_cast<int>(lap.rows());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(lap.nonZeros()) * n + static_cast<std::size_t>(nodes) * n * n);
  for (int col = 0; col < lap.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(lap, col); it; ++it) {
      for (int c = 0; c < n; ++c) {
        triplets.emplace_back(static_cast<int>(it.row()) * n + c, static_cast<int>(it.col()) * n + c, it.value());
      }
    }
  }
  for (int k = 0; k < nodes; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double coupling = -a(i, j) - (i == j ? problem.mu : 0.0);
        if (coupling != 0.0) triplets.emplace_back(k * n + i, k * n + j, coupling);
      }
    }
  }
  SparseMatrix block(nodes * n, nodes * n);
  block.setFromTriplets(triplets.begin(), triplets.end());
  block.makeCompressed();

  Eigen::VectorXd rhs(nodes * n);
  for (int k = 0; k < nodes; ++k) {
    for (int i = 0; i < n; ++i) rhs(k * n + i) = problem.f[i][k];
  }

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(block);
  lu.factorize(block);
  if (lu.info() != Eigen::Success) throw SingularSystem("coupled block system is numerically singular");
  Eigen::VectorXd x = lu.solve(rhs);
  for (int step = 0; step < 2; ++step) x += lu.solve(rhs - block * x);
  if (!x.allFinite()) throw SingularSystem("coupled block solve produced non-finite values");

  SystemSolution out;
  out.method = "direct";
  out.u.assign(n, GridFunction(problem.spectrum.grid()));
  for (int k = 0; k < nodes; ++k) {
    for (int i = 0; i < n; ++i) out.u[i][k] = x(k * n + i);
  }
  out.u_tilde = combine(cm.p_inv(), out.u);
  measure_residual(problem, out);
  return out;
}

}  // namespace signlab
