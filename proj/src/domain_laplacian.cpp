#include "signlab/domain_laplacian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "signlab/error.hpp"

namespace signlab {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using DenseVector = Eigen::VectorXd;

void require_same_grid(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid() == b.grid())) {
    throw ConfigError("grid_mismatch", "grid functions live on different grids");
  }
}

Eigen::Map<const DenseVector> as_vector(const GridFunction& g) {
  return {g.values().data(), static_cast<Eigen::Index>(g.size())};
}

// 1D eigenvalue of the 3-point stencil for mode k.
double axis_eigenvalue(int k, int nodes, double h) {
  const double s = std::sin(k * std::numbers::pi / (2.0 * (nodes + 1)));
  return 4.0 / (h * h) * s * s;
}

}  // namespace

double DomainGrid::discrete_eigenvalue(int kx, int ky) const {
  double value = axis_eigenvalue(kx, resolution[0], spacing[0]);
  if (dimension == 2) value += axis_eigenvalue(ky, resolution[1], spacing[1]);
  return value;
}

double DomainGrid::distance_to_spectrum(double sigma) const {
  double best = std::numeric_limits<double>::infinity();
  if (dimension == 1) {
    for (int k = 1; k <= resolution[0]; ++k) {
      best = std::min(best, std::abs(sigma - axis_eigenvalue(k, resolution[0], spacing[0])));
    }
    return best;
  }
  std::vector<double> ys(resolution[1]);
  for (int k = 1; k <= resolution[1]; ++k) ys[k - 1] = axis_eigenvalue(k, resolution[1], spacing[1]);
  for (int kx = 1; kx <= resolution[0]; ++kx) {
    const double x = axis_eigenvalue(kx, resolution[0], spacing[0]);
    for (double y : ys) best = std::min(best, std::abs(sigma - x - y));
  }
  return best;
}

DomainGrid build_grid(int dimension, std::span<const double> extents, std::span<const int> resolution) {
  if (dimension != 1 && dimension != 2) throw InvalidGrid("dimension must be 1 or 2");
  if (extents.size() < static_cast<std::size_t>(dimension) ||
      resolution.size() < static_cast<std::size_t>(dimension)) {
    throw InvalidGrid("need one extent and one resolution per axis");
  }
  DomainGrid grid;
  grid.dimension = dimension;
  for (int axis = 0; axis < dimension; ++axis) {
    if (!(extents[axis] > 0.0) || !std::isfinite(extents[axis])) {
      throw InvalidGrid("extents must be positive");
    }
    if (resolution[axis] < 3) throw InvalidGrid("resolution must be at least 3 nodes per axis");
    grid.extents[axis] = extents[axis];
    grid.resolution[axis] = resolution[axis];
    grid.spacing[axis] = extents[axis] / (resolution[axis] + 1);
  }
  return grid;
}

GridFunction::GridFunction(DomainGrid grid) : grid_(grid), values_(grid.node_count(), 0.0) {}

GridFunction::GridFunction(DomainGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(grid_.node_count())) {
    throw ConfigError("grid_mismatch", "value count does not match the grid");
  }
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }

GridFunction& GridFunction::operator+=(const GridFunction& other) { return add_scaled(1.0, other); }
GridFunction& GridFunction::operator-=(const GridFunction& other) { return add_scaled(-1.0, other); }

GridFunction& GridFunction::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

GridFunction& GridFunction::add_scaled(double s, const GridFunction& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * other.values_[i];
  return *this;
}

GridFunction sample(const DomainGrid& grid, const std::function<double(double, double)>& f) {
  GridFunction g(grid);
  const int ny = grid.dimension == 2 ? grid.resolution[1] : 1;
  for (int iy = 0; iy < ny; ++iy) {
    const double y = grid.dimension == 2 ? grid.coordinate(1, iy) : 0.0;
    for (int ix = 0; ix < grid.resolution[0]; ++ix) g[grid.node(ix, iy)] = f(grid.coordinate(0, ix), y);
  }
  return g;
}

double inner(const GridFunction& a, const GridFunction& b) {
  require_same_grid(a, b);
  return as_vector(a).dot(as_vector(b)) * a.grid().cell_volume();
}

double l2_norm(const GridFunction& g) { return std::sqrt(inner(g, g)); }

double lq_norm(const GridFunction& g, double q) {
  double sum = 0.0;
  for (double v : g.values()) sum += std::pow(std::abs(v), q);
  return std::pow(sum * g.grid().cell_volume(), 1.0 / q);
}

GridFunction apply_neg_laplacian(const GridFunction& g) {
  const DomainGrid& grid = g.grid();
  GridFunction out(grid);
  const int nx = grid.resolution[0];
  const int ny = grid.dimension == 2 ? grid.resolution[1] : 1;
  const double ix2 = 1.0 / (grid.spacing[0] * grid.spacing[0]);
  const double iy2 = grid.dimension == 2 ? 1.0 / (grid.spacing[1] * grid.spacing[1]) : 0.0;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int k = grid.node(ix, iy);
      double v = 2.0 * g[k] * ix2;
      if (ix > 0) v -= g[k - 1] * ix2;
      if (ix + 1 < nx) v -= g[k + 1] * ix2;
      if (grid.dimension == 2) {
        v += 2.0 * g[k] * iy2;
        if (iy > 0) v -= g[k - nx] * iy2;
        if (iy + 1 < ny) v -= g[k + nx] * iy2;
      }
      out[k] = v;
    }
  }
  return out;
}

struct DirichletLaplacian::Factorization {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  SparseMatrix shifted;
};

DirichletLaplacian::DirichletLaplacian(DomainGrid grid) : grid_(grid) {
  const int n = grid_.node_count();
  const int nx = grid_.resolution[0];
  const int ny = grid_.dimension == 2 ? grid_.resolution[1] : 1;
  const double ix2 = 1.0 / (grid_.spacing[0] * grid_.spacing[0]);
  const double iy2 = grid_.dimension == 2 ? 1.0 / (grid_.spacing[1] * grid_.spacing[1]) : 0.0;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * (grid_.dimension == 2 ? 5 : 3));
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int k = grid_.node(ix, iy);
      triplets.emplace_back(k, k, 2.0 * ix2 + 2.0 * iy2);
      if (ix > 0) triplets.emplace_back(k, k - 1, -ix2);
      if (ix + 1 < nx) triplets.emplace_back(k, k + 1, -ix2);
      if (grid_.dimension == 2) {
        if (iy > 0) triplets.emplace_back(k, k - nx, -iy2);
        if (iy + 1 < ny) triplets.emplace_back(k, k + nx, -iy2);
      }
    }
  }
  matrix_.resize(n, n);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
  norm_inf_ = 4.0 * ix2 + 4.0 * iy2;
}

DirichletLaplacian::~DirichletLaplacian() = default;

std::size_t DirichletLaplacian::cached_factorizations() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::shared_ptr<const DirichletLaplacian::Factorization> DirichletLaplacian::factorization(double sigma) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(sigma); it != cache_.end()) return it->second;
  }
  auto f = std::make_shared<Factorization>();
  SparseMatrix identity(matrix_.rows(), matrix_.cols());
  identity.setIdentity();
  f->shifted = matrix_ - sigma * identity;
  f->shifted.makeCompressed();
  f->lu.analyzePattern(f->shifted);
  f->lu.factorize(f->shifted);
  if (f->lu.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "factorization of the shifted Laplacian failed at sigma = " << sigma;
    throw NearSingularShift(msg.str());
  }
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.emplace(sigma, std::move(f));
  if (inserted) {
    insertion_order_.push_back(sigma);
    if (insertion_order_.size() > kCacheCapacity) {
      cache_.erase(insertion_order_.front());
      insertion_order_.erase(insertion_order_.begin());
    }
  }
  return it->second;
}

GridFunction DirichletLaplacian::solve(double sigma, const GridFunction& rhs) const {
  if (!(rhs.grid() == grid_)) throw ConfigError("grid_mismatch", "right-hand side lives on another grid");
  if (grid_.distance_to_spectrum(sigma) < kShiftExclusion) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "shift " << sigma << " is within " << kShiftExclusion << " of a discrete eigenvalue";
    throw NearSingularShift(msg.str());
  }
  const auto f = factorization(sigma);
  const DenseVector b = as_vector(rhs);
  DenseVector x = f->lu.solve(b);
  const double rhs_norm = b.lpNorm<Eigen::Infinity>();
  const double op_norm = norm_inf_ + std::abs(sigma);
  double backward = 0.0;
  for (int step = 0; step < 3; ++step) {
    const DenseVector r = b - f->shifted * x;
    const double denom = op_norm * x.lpNorm<Eigen::Infinity>() + rhs_norm;
    backward = denom > 0.0 ? r.lpNorm<Eigen::Infinity>() / denom : 0.0;
    if (backward <= 0.25 * kBackwardErrorTol) break;
    x += f->lu.solve(r);
  }
  if (backward > kBackwardErrorTol) {
    std::ostringstream msg;
    msg << "shifted solve backward error " << backward << " exceeds tolerance";
    throw NumericalFailure("solve_inaccurate", msg.str());
  }
  return GridFunction(grid_, std::vector<double>(x.data(), x.data() + x.size()));
}

namespace {

struct PowerResult {
  GridFunction vector;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

double relative_residual(const GridFunction& x, double* rayleigh) {
  const GridFunction lx = apply_neg_laplacian(x);
  const double rho = inner(x, lx) / inner(x, x);
  GridFunction r = lx;
  r.add_scaled(-rho, x);
  *rayleigh = rho;
  return l2_norm(r) / (std::abs(rho) * l2_norm(x));
}

PowerResult inverse_iteration(const DirichletLaplacian& op, GridFunction x) {
  constexpr int kMaxIterations = 2000;
  constexpr double kTarget = 1e-13;
  x *= 1.0 / l2_norm(x);
  PowerResult out;
  double previous = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    x = op.solve(0.0, x);
    x *= 1.0 / l2_norm(x);
    double rho = 0.0;
    const double res = relative_residual(x, &rho);
    out.iterations = iter;
    out.value = rho;
    out.residual = res;
    if (res <= kTarget) break;
    stalled = res > 0.9 * previous ? stalled + 1 : 0;
    if (res <= kEigenResidualTol && stalled >= 3) break;
    previous = res;
  }
  out.vector = std::move(x);
  if (out.residual > kEigenResidualTol) {
    std::ostringstream msg;
    msg << "inverse iteration residual " << out.residual << " after " << out.iterations << " iterations";
    throw ConvergenceFailure(msg.str());
  }
  return out;
}

// Deflated block inverse iteration with Rayleigh-Ritz on the block. The
// lowest Ritz pair converges at the rate lambda2 / lambda_{m+2} even when
// lambda2 is (nearly) repeated.
PowerResult subspace_iteration(const DirichletLaplacian& op, GridFunction start, const GridFunction& deflate) {
  constexpr int kMaxIterations = 2000;
  constexpr double kTarget = 1e-13;
  const GridFunction zero(op.grid());
  const int m = static_cast<int>(std::min<std::size_t>(4, zero.size() - 1));
  std::vector<GridFunction> block{std::move(start)};
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  while (static_cast<int>(block.size()) < m) {
    GridFunction v = zero;
    for (double& x : v.values()) x = unit(rng);
    block.push_back(std::move(v));
  }
  auto orthonormalize = [&] {
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < m; ++i) {
        block[i].add_scaled(-inner(block[i], deflate), deflate);
        for (int j = 0; j < i; ++j) block[i].add_scaled(-inner(block[i], block[j]), block[j]);
        block[i] *= 1.0 / l2_norm(block[i]);
      }
    }
  };
  orthonormalize();

  PowerResult out;
  double previous = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    for (GridFunction& v : block) v = op.solve(0.0, v);
    orthonormalize();
    std::vector<GridFunction> images;
    for (const GridFunction& v : block) images.push_back(apply_neg_laplacian(v));
    Eigen::MatrixXd h(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j) h(i, j) = h(j, i) = 0.5 * (inner(block[i], images[j]) + inner(block[j], images[i]));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(h);
    std::vector<GridFunction> rotated(m, zero);
    for (int k = 0; k < m; ++k)
      for (int i = 0; i < m; ++i) rotated[k].add_scaled(ritz.eigenvectors()(i, k), block[i]);
    block = std::move(rotated);
    double rho = 0.0;
    const double res = relative_residual(block.front(), &rho);
    out.iterations = iter;
    out.value = rho;
    out.residual = res;
    if (res <= kTarget) break;
    stalled = res > 0.9 * previous ? stalled + 1 : 0;
    if (res <= kEigenResidualTol && stalled >= 3) break;
    previous = res;
  }
  out.vector = std::move(block.front());
  if (out.residual > kEigenResidualTol) {
    std::ostringstream msg;
    msg << "subspace iteration residual " << out.residual << " after " << out.iterations << " iterations";
    throw ConvergenceFailure(msg.str());
  }
  return out;
}

void orient(GridFunction& g) {
  const double largest = g.max_abs();
  for (double v : g.values()) {
    if (std::abs(v) >= (1.0 - 1e-9) * largest) {
      if (v < 0.0) g *= -1.0;
      return;
    }
  }
}

}  // namespace

DomainSpectrum leading_eigenpairs(const DomainGrid& grid) {
  return leading_eigenpairs(std::make_shared<const DirichletLaplacian>(grid));
}

DomainSpectrum leading_eigenpairs(std::shared_ptr<const DirichletLaplacian> laplacian) {
  const DomainGrid& grid = laplacian->grid();
  DomainSpectrum s;
  s.laplacian = laplacian;

  PowerResult first = inverse_iteration(*laplacian, sample(grid, [](double, double) { return 1.0; }));
  if (inner(first.vector, sample(grid, [](double, double) { return 1.0; })) < 0.0) first.vector *= -1.0;
  s.phi1 = std::move(first.vector);
  s.phi1 *= 1.0 / l2_norm(s.phi1);
  if (s.phi1.min() <= 0.0) throw ConvergenceFailure("ground state is not positive at every interior node");
  s.lambda1 = first.value;
  s.residual1 = first.residual;

  const double cx = 0.5 * grid.extents[0];
  const double cy = 0.5 * grid.extents[1];
  GridFunction start = sample(grid, [&](double x, double y) { return (x - cx) + 0.37 * (y - cy) + 0.05; });
  PowerResult second = subspace_iteration(*laplacian, std::move(start), s.phi1);
  s.phi2 = std::move(second.vector);
  s.phi2.add_scaled(-inner(s.phi2, s.phi1), s.phi1);
  s.phi2 *= 1.0 / l2_norm(s.phi2);
  orient(s.phi2);
  s.lambda2 = second.value;
  s.residual2 = second.residual;
  s.iterations = first.iterations + second.iterations;
  if (!(s.lambda2 > s.lambda1)) throw ConvergenceFailure("second eigenvalue did not separate from the first");
  return s;
}

GridFunction solve_shifted(double sigma, const GridFunction& h, const DomainSpectrum& spectrum) {
  return spectrum.laplacian->solve(sigma, h);
}

std::vector<double> normal_derivatives(const GridFunction& g) {
  const DomainGrid& grid = g.grid();
  std::vector<double> out;
  const int nx = grid.resolution[0];
  const double hx = grid.spacing[0];
  // Outward derivative toward a face where g = 0, from the two nearest
  // interior values a (adjacent) and b (next): -(4a - b) / (2h).
  auto outward = [](double a, double b, double h) { return -(4.0 * a - b) / (2.0 * h); };
  if (grid.dimension == 1) {
    out.push_back(outward(g[0], g[1], hx));
    out.push_back(outward(g[nx - 1], g[nx - 2], hx));
    return out;
  }
  const int ny = grid.resolution[1];
  const double hy = grid.spacing[1];
  for (int iy = 0; iy < ny; ++iy) out.push_back(outward(g[grid.node(0, iy)], g[grid.node(1, iy)], hx));
  for (int iy = 0; iy < ny; ++iy) {
    out.push_back(outward(g[grid.node(nx - 1, iy)], g[grid.node(nx - 2, iy)], hx));
  }
  for (int ix = 0; ix < nx; ++ix) out.push_back(outward(g[grid.node(ix, 0)], g[grid.node(ix, 1)], hy));
  for (int ix = 0; ix < nx; ++ix) {
    out.push_back(outward(g[grid.node(ix, ny - 1)], g[grid.node(ix, ny - 2)], hy));
  }
  return out;
}

namespace {

// Per-node dead-band thresholds for normal_derivatives(g).
std::vector<double> derivative_thresholds(const DomainGrid& grid, double reference) {
  const double band = kSignDeadband * reference;
  if (grid.dimension == 1) return {band / grid.spacing[0], band / grid.spacing[0]};
  std::vector<double> out;
  out.insert(out.end(), 2 * static_cast<std::size_t>(grid.resolution[1]), band / grid.spacing[0]);
  out.insert(out.end(), 2 * static_cast<std::size_t>(grid.resolution[0]), band / grid.spacing[1]);
  return out;
}

}  // namespace

std::vector<Sign> normal_derivative_signs(const GridFunction& g, double reference) {
  if (reference < 0.0) reference = g.max_abs();
  const std::vector<double> d = normal_derivatives(g);
  const std::vector<double> thresholds = derivative_thresholds(g.grid(), reference);
  std::vector<Sign> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = sign_of(d[i], thresholds[i]);
  return out;
}

Sign interior_sign(const GridFunction& g, double reference) {
  if (reference < 0.0) reference = g.max_abs();
  return uniform_sign(g.values(), kSignDeadband * reference);
}

Sign boundary_sign(const GridFunction& g, double reference) {
  const std::vector<Sign> signs = normal_derivative_signs(g, reference);
  bool pos = false, neg = false, zero = false;
  for (Sign s : signs) {
    pos |= s == Sign::kPositive;
    neg |= s == Sign::kNegative;
    zero |= s == Sign::kZero;
  }
  if (pos && !neg && !zero) return Sign::kPositive;
  if (neg && !pos && !zero) return Sign::kNegative;
  if (!pos && !neg) return Sign::kZero;
  return Sign::kMixed;
}

}  // namespace signlab
