#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "signlab/sign.hpp"

namespace signlab {

/// Tensor grid of interior nodes on an interval (dimension 1) or a
/// rectangle (dimension 2). Boundary nodes are implicit and carry zero.
struct DomainGrid {
  int dimension = 1;
  std::array<double, 2> extents{1.0, 1.0};
  std::array<int, 2> resolution{1, 1};
  std::array<double, 2> spacing{1.0, 1.0};

  int node_count() const { return dimension == 1 ? resolution[0] : resolution[0] * resolution[1]; }
  /// Volume element of the discrete inner product.
  double cell_volume() const { return dimension == 1 ? spacing[0] : spacing[0] * spacing[1]; }
  /// Coordinate of interior node `index` along `axis` (index 0 sits at one spacing).
  double coordinate(int axis, int index) const { return (index + 1) * spacing[axis]; }
  /// Row-major node index: x varies fastest.
  int node(int ix, int iy = 0) const { return iy * resolution[0] + ix; }

  /// Exact eigenvalue of the discrete operator for mode (kx, ky), 1-based.
  double discrete_eigenvalue(int kx, int ky = 1) const;
  /// Distance from `sigma` to the nearest eigenvalue of the discrete operator.
  double distance_to_spectrum(double sigma) const;

  bool operator==(const DomainGrid&) const = default;
};

/// Throws InvalidGrid on nonpositive extents or fewer than 3 nodes per axis.
DomainGrid build_grid(int dimension, std::span<const double> extents, std::span<const int> resolution);

/// Real values on the interior nodes of a grid.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(DomainGrid grid);
  GridFunction(DomainGrid grid, std::vector<double> values);

  const DomainGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double max_abs() const;
  double max() const;
  double min() const;

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double s);
  /// this += s * other
  GridFunction& add_scaled(double s, const GridFunction& other);

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
  friend GridFunction operator-(GridFunction a) { return a *= -1.0; }

 private:
  DomainGrid grid_;
  std::vector<double> values_;
};

/// Samples f(x, y) at the interior nodes (y = 0 in 1D).
GridFunction sample(const DomainGrid& grid, const std::function<double(double, double)>& f);

/// Discrete L2 inner product including the volume element.
double inner(const GridFunction& a, const GridFunction& b);
double l2_norm(const GridFunction& g);
/// Quadrature p-th power norm (sum |g|^q * volume)^(1/q).
double lq_norm(const GridFunction& g, double q);

/// -Delta_h with Dirichlet closure (3-point in 1D, 5-point in 2D).
GridFunction apply_neg_laplacian(const GridFunction& g);

/// Sparse -Delta_h on a grid with a cache of shifted factorizations.
/// All const members may be called concurrently.
class DirichletLaplacian {
 public:
  explicit DirichletLaplacian(DomainGrid grid);
  ~DirichletLaplacian();
  DirichletLaplacian(const DirichletLaplacian&) = delete;
  DirichletLaplacian& operator=(const DirichletLaplacian&) = delete;

  const DomainGrid& grid() const { return grid_; }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  /// max row sum of |entries|.
  double norm_inf() const { return norm_inf_; }

  /// Solves (-Delta_h - sigma) z = rhs. Throws NearSingularShift when sigma
  /// lies within kShiftExclusion of the discrete spectrum.
  GridFunction solve(double sigma, const GridFunction& rhs) const;

  std::size_t cached_factorizations() const;

  static constexpr double kShiftExclusion = 1e-8;
  static constexpr double kBackwardErrorTol = 1e-12;
  static constexpr std::size_t kCacheCapacity = 32;

 private:
  struct Factorization;
  std::shared_ptr<const Factorization> factorization(double sigma) const;

  DomainGrid grid_;
  Eigen::SparseMatrix<double> matrix_;
  double norm_inf_ = 0.0;
  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<const Factorization>> cache_;
  mutable std::vector<double> insertion_order_;
};

/// The two smallest eigenpairs of -Delta_h. phi1 > 0, both unit in the
/// discrete L2 norm, phi2 orthogonal to phi1.
struct DomainSpectrum {
  std::shared_ptr<const DirichletLaplacian> laplacian;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  GridFunction phi1;
  GridFunction phi2;
  double residual1 = 0.0;
  double residual2 = 0.0;
  int iterations = 0;

  const DomainGrid& grid() const { return laplacian->grid(); }
};

/// Inverse power iteration (shift 0), with deflation against phi1 for the
/// second pair. Throws ConvergenceFailure when the relative residual
/// exceeds kEigenResidualTol at the iteration cap.
DomainSpectrum leading_eigenpairs(const DomainGrid& grid);
DomainSpectrum leading_eigenpairs(std::shared_ptr<const DirichletLaplacian> laplacian);

inline constexpr double kEigenResidualTol = 1e-10;

/// z with (-Delta_h - sigma) z = h, using the spectrum's operator.
GridFunction solve_shifted(double sigma, const GridFunction& h, const DomainSpectrum& spectrum);

/// Outward normal derivatives at the boundary nodes from the one-sided
/// second-order difference. Order: 1D {x = 0, x = L}; 2D faces x = 0,
/// x = Lx (one value per row), then y = 0, y = Ly (one per column).
/// Corners are excluded.
std::vector<double> normal_derivatives(const GridFunction& g);

/// Dead-band signs of normal_derivatives(g). `reference` defaults to
/// max|g|; a derivative counts as zero below kSignDeadband * reference / h.
std::vector<Sign> normal_derivative_signs(const GridFunction& g, double reference = -1.0);

/// Uniform sign over the interior nodes / the boundary derivatives, with
/// the same dead-band convention.
Sign interior_sign(const GridFunction& g, double reference = -1.0);
Sign boundary_sign(const GridFunction& g, double reference = -1.0);

}  // namespace signlab
