#pragma once

#include <string>
#include <vector>

#include "signlab/coupling_matrix.hpp"
#include "signlab/domain_laplacian.hpp"

namespace signlab {

/// -Delta U = A U + mu U + F with homogeneous Dirichlet data.
struct SystemProblem {
  CouplingMatrix cm;
  double mu = 0.0;
  std::vector<GridFunction> f;
  DomainSpectrum spectrum;
};

/// Builds a problem after checking component counts, grids, and that no
/// shift xi_k + mu lies within the exclusion band of the discrete spectrum
/// (NearSingularShift otherwise).
SystemProblem make_problem(CouplingMatrix cm, double mu, std::vector<GridFunction> f, DomainSpectrum spectrum);

struct SystemSolution {
  std::vector<GridFunction> u;
  std::vector<GridFunction> u_tilde;
  /// max over components of max|(-Delta_h - mu) u_i - (A u)_i - f_i|.
  double residual = 0.0;
  /// residual / (||-Delta_h - A - mu|| max|u| + max|f|).
  double backward_error = 0.0;
  std::string method;
};

/// Nodewise combination out_i = sum_j m_ij in_j.
std::vector<GridFunction> combine(const Matrix& m, const std::vector<GridFunction>& in);

/// F~ = P^-1 F.
std::vector<GridFunction> transform_source(const CouplingMatrix& cm, const std::vector<GridFunction>& f);

/// Sequential solve in the Jordan basis followed by U = P U~.
SystemSolution solve_jordan(const SystemProblem& problem);

/// Monolithic sparse solve of the coupled system, unknowns ordered node-major.
/// Throws SingularSystem when the factorization fails.
SystemSolution solve_direct(const SystemProblem& problem);

/// Residual of U in the discrete system; fills residual and backward_error.
void measure_residual(const SystemProblem& problem, SystemSolution& solution);

}  // namespace signlab
