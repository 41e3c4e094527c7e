#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's solvers: discrete eigenpairs of the tensor stencil are known in
// closed form, and solutions for data spanned by finitely many modes follow
// from per-mode algebra.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "signlab/domain_laplacian.hpp"

namespace signlab::oracle {

/// Closed-form eigenvalue of the 3/5-point stencil for mode (kx, ky).
inline double eigenvalue(const DomainGrid& g, int kx, int ky = 1) {
  auto axis = [](int k, int n, double h) {
    const double s = std::sin(k * std::numbers::pi / (2.0 * (n + 1)));
    return 4.0 / (h * h) * s * s;
  };
  double v = axis(kx, g.resolution[0], g.spacing[0]);
  if (g.dimension == 2) v += axis(ky, g.resolution[1], g.spacing[1]);
  return v;
}

/// Discrete-L2-normalized sine mode sin(kx pi x / Lx) sin(ky pi y / Ly).
inline GridFunction mode(const DomainGrid& g, int kx, int ky = 1) {
  std::vector<double> v(g.node_count());
  const int ny = g.dimension == 2 ? g.resolution[1] : 1;
  double sum = 0.0;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < g.resolution[0]; ++ix) {
      double value = std::sin(kx * std::numbers::pi * (ix + 1) / (g.resolution[0] + 1));
      if (g.dimension == 2) value *= std::sin(ky * std::numbers::pi * (iy + 1) / (g.resolution[1] + 1));
      v[iy * g.resolution[0] + ix] = value;
      sum += value * value;
    }
  }
  const double norm = std::sqrt(sum * g.cell_volume());
  for (double& x : v) x /= norm;
  return GridFunction(g, std::move(v));
}

/// A scalar source expanded in 1D modes: sum_k coeff[k] * mode(k + 1).
struct ModalSource {
  std::vector<double> coeffs;
};

/// z = sum_k c_k / (lambda_k - sigma) mode_k for 1D data with finitely many modes.
inline GridFunction modal_solve(const DomainGrid& g, const std::vector<double>& coeffs, double sigma) {
  GridFunction z(g);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] == 0.0) continue;
    z.add_scaled(coeffs[k] / (eigenvalue(g, static_cast<int>(k) + 1) - sigma), mode(g, static_cast<int>(k) + 1));
  }
  return z;
}

/// System solution for F = sum_k mode_k * b_k (b_k in R^n):
/// U = sum_k mode_k * ((lambda_k - mu) I - A)^{-1} b_k.
inline std::vector<GridFunction> modal_system_solve(const DomainGrid& g, const Eigen::MatrixXd& a, double mu,
                                                    const std::vector<Eigen::VectorXd>& per_mode) {
  const int n = static_cast<int>(a.rows());
  std::vector<GridFunction> u(n, GridFunction(g));
  for (std::size_t k = 0; k < per_mode.size(); ++k) {
    const double lam = eigenvalue(g, static_cast<int>(k) + 1);
    const Eigen::MatrixXd m = (lam - mu) * Eigen::MatrixXd::Identity(n, n) - a;
    const Eigen::VectorXd c = m.fullPivLu().solve(per_mode[k]);
    const GridFunction phi = mode(g, static_cast<int>(k) + 1);
    for (int i = 0; i < n; ++i) u[i].add_scaled(c(i), phi);
  }
  return u;
}

/// Strict sign pattern test written out directly on nodal values:
/// `sign` = -1 asks for z < 0 inside and positive outward slopes.
inline bool sign_pattern_1d(const GridFunction& z, int sign) {
  double ref = 0.0;
  for (double v : z.values()) ref = std::max(ref, std::abs(v));
  const double band = 1e-9 * ref;
  for (double v : z.values()) {
    if (!(sign * v > band)) return false;
  }
  const std::size_t n = z.size();
  const double h = z.grid().spacing[0];
  const double left = -(4.0 * z[0] - z[1]) / (2.0 * h);
  const double right = -(4.0 * z[n - 1] - z[n - 2]) / (2.0 * h);
  return -sign * left > band / h && -sign * right > band / h;
}

/// Bisection on sigma in (lo, hi) for the end of the antimaximum range of
/// the 1D modal data, evaluated by modal_solve.
inline double modal_amp_threshold(const DomainGrid& g, const std::vector<double>& coeffs, double lo, double hi,
                                  double width) {
  if (sign_pattern_1d(modal_solve(g, coeffs, hi), -1)) return hi;
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (sign_pattern_1d(modal_solve(g, coeffs, mid), -1)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double max_abs_diff(const GridFunction& a, const GridFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Random matrix P0 J0 P0^{-1} with a prescribed lower Jordan form.
struct Constructed {
  Eigen::MatrixXd a;
  Eigen::MatrixXd j;
  std::vector<double> eigenvalues;  // non-increasing, with multiplicity
};

/// Well-conditioned random basis: orthogonal * diag(in [0.5, 2]) * orthogonal.
inline Eigen::MatrixXd random_basis(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  auto orth = [&] {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return Eigen::MatrixXd(qr.householderQ());
  };
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = scale(rng);
  return orth() * d.asDiagonal() * orth();
}

/// `blocks` lists (eigenvalue, size) in non-increasing eigenvalue order.
inline Constructed construct(const std::vector<std::pair<double, int>>& blocks, std::mt19937_64& rng) {
  int n = 0;
  for (const auto& b : blocks) n += b.second;
  Constructed c;
  c.j = Eigen::MatrixXd::Zero(n, n);
  int at = 0;
  for (const auto& [value, size] : blocks) {
    for (int i = 0; i < size; ++i) {
      c.j(at + i, at + i) = value;
      if (i + 1 < size) c.j(at + i + 1, at + i) = 1.0;
      c.eigenvalues.push_back(value);
    }
    at += size;
  }
  const Eigen::MatrixXd p0 = random_basis(n, rng);
  c.a = p0 * c.j * p0.inverse();
  return c;
}

}  // namespace signlab::oracle
