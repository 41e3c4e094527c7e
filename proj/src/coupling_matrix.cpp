#include "signlab/coupling_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "signlab/error.hpp"

namespace signlab {

namespace {

using Complex = std::complex<double>;

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Cluster {
  Complex value;
  int size = 1;
};

double matrix_scale(const Matrix& a) { return std::max(1.0, a.cwiseAbs().maxCoeff()); }

void validate_input(const Matrix& a, double tol) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    throw ConfigError("invalid_matrix", "coupling matrix must be square and non-empty");
  }
  if (!a.allFinite()) {
    throw ConfigError("invalid_matrix", "coupling matrix has non-finite entries");
  }
  if (!(tol > 0.0)) {
    throw ConfigError("invalid_tolerance", "matrix tolerance must be positive");
  }
}

Complex evaluate(const std::vector<double>& c, Complex z) {
  Complex acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
  return acc;
}

Complex evaluate_derivative(const std::vector<double>& c, Complex z) {
  Complex acc = 0.0;
  for (std::size_t k = c.size() - 1; k >= 1; --k) acc = acc * z + static_cast<double>(k) * c[k];
  return acc;
}

// Simultaneous Aberth-Ehrlich iteration on a monic polynomial.
std::vector<Complex> polynomial_roots(const std::vector<double>& c) {
  const int degree = static_cast<int>(c.size()) - 1;
  std::vector<Complex> z(degree);
  if (degree == 1) {
    z[0] = -c[0];
    return z;
  }
  double bound = 0.0;
  for (int k = 0; k < degree; ++k) bound = std::max(bound, std::abs(c[k]));
  const double radius = 1.0 + bound;
  for (int k = 0; k < degree; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / degree + 0.4;
    z[k] = std::polar(radius, angle);
  }
  for (int iter = 0; iter < 2000; ++iter) {
    double max_step = 0.0;
    for (int k = 0; k < degree; ++k) {
      const Complex p = evaluate(c, z[k]);
      if (p == Complex(0.0)) continue;
      const Complex w = p / evaluate_derivative(c, z[k]);
      Complex s = 0.0;
      for (int j = 0; j < degree; ++j) {
        if (j != k) s += 1.0 / (z[k] - z[j]);
      }
      const Complex step = w / (1.0 - w * s);
      z[k] -= step;
      max_step = std::max(max_step, std::abs(step) / std::max(1.0, std::abs(z[k])));
    }
    if (max_step < 4.0 * kEps) break;
  }
  return z;
}

Complex newton_polish(const std::vector<double>& c, Complex z) {
  for (int iter = 0; iter < 8; ++iter) {
    const Complex p = evaluate(c, z);
    const Complex dp = evaluate_derivative(c, z);
    if (dp == Complex(0.0)) break;
    const Complex next = z - p / dp;
    if (std::abs(evaluate(c, next)) >= std::abs(p)) break;
    z = next;
  }
  return z;
}

// Allowed half-diameter for a group of m computed roots to count as one
// eigenvalue of multiplicity m. A defective eigenvalue of multiplicity m
// splits by roughly eps^(1/m) under rounding.
double cluster_radius(int m, double scale, double tol) {
  const double split = m == 1 ? 0.0 : 100.0 * std::pow(kEps, 1.0 / m);
  return scale * std::max(tol, split);
}

std::vector<Cluster> cluster_roots(std::vector<Complex> roots, double scale, double tol) {
  std::sort(roots.begin(), roots.end(), [](Complex x, Complex y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  std::vector<Cluster> clusters;
  const int n = static_cast<int>(roots.size());
  int i = 0;
  while (i < n) {
    int m = n - i;
    for (; m > 1; --m) {
      const double limit = 2.0 * cluster_radius(m, scale, tol);
      bool tight = true;
      for (int a = i; a < i + m && tight; ++a) {
        for (int b = a + 1; b < i + m; ++b) {
          if (std::abs(roots[a] - roots[b]) > limit) {
            tight = false;
            break;
          }
        }
      }
      if (tight) break;
    }
    Complex mean = 0.0;
    for (int a = i; a < i + m; ++a) mean += roots[a];
    clusters.push_back({mean / static_cast<double>(m), m});
    i += m;
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const Cluster& x, const Cluster& y) { return x.value.real() > y.value.real(); });
  return clusters;
}

// The roots of a defective cluster scatter off the real axis without
// cancelling, so its mean is only real to within the cluster radius.
bool is_real(const Cluster& c, double scale, double tol) {
  return std::abs(c.value.imag()) <= cluster_radius(c.size, scale, tol);
}

std::vector<Cluster> compute_clusters(const Matrix& a, double tol) {
  const double scale = matrix_scale(a);
  const int n = static_cast<int>(a.rows());
  if (n <= 4) {
    const std::vector<double> coeffs = characteristic_polynomial(a);
    std::vector<Cluster> clusters = cluster_roots(polynomial_roots(coeffs), scale, tol);
    for (Cluster& c : clusters) {
      if (c.size == 1) c.value = newton_polish(coeffs, c.value);
    }
    return clusters;
  }
  Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("eigen_failure", "eigenvalue iteration did not converge");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  return cluster_roots(std::vector<Complex>(values.data(), values.data() + n), scale, tol);
}

// Orthonormal basis of the invariant subspace belonging to the eigenvalue
// cluster at xi, by shifted inverse subspace iteration. The shift sits at a
// fixed fraction of the distance `gap` to the nearest other eigenvalue:
// closer shifts amplify the cluster's chain directions too unevenly.
Matrix invariant_subspace(const Matrix& a, double xi, int m, double gap) {
  const int n = static_cast<int>(a.rows());
  const Matrix shifted = a - xi * Matrix::Identity(n, n);
  Matrix power = Matrix::Identity(n, n);
  for (int k = 0; k < m; ++k) power = shifted * power;
  Eigen::JacobiSVD<Matrix> svd(power, Eigen::ComputeFullV);
  Matrix basis = svd.matrixV().rightCols(m);

  const double offset = 0.01 * gap;
  const Eigen::PartialPivLU<Matrix> lu(a - (xi + offset) * Matrix::Identity(n, n));
  for (int iter = 0; iter < 12; ++iter) {
    const Matrix next = lu.solve(basis);
    Eigen::HouseholderQR<Matrix> qr(next);
    basis = qr.householderQ() * Matrix::Identity(n, m);
  }
  return basis;
}

// Orthonormal basis of the null space of `m`, columns ordered by increasing
// singular value. The dimension is decided relative to the largest
// singular value.
Matrix null_space(const Matrix& m, double tol) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double threshold = tol * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++rank;
  }
  const int dim = static_cast<int>(m.cols()) - rank;
  return svd.matrixV().rightCols(dim);
}

// Orthonormal basis of span(columns of s), dropping dependent directions.
Matrix orthonormal_span(const Matrix& s) {
  if (s.cols() == 0) return s;
  Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-10 * sv(0)) ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

int leading_index(const Vector& v) {
  const double largest = v.cwiseAbs().maxCoeff();
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= (1.0 - 1e-12) * largest) return i;
  }
  return 0;
}

// Chain tops (in subspace coordinates) for the nilpotent matrix `nil`,
// longest chains first. Each entry pairs a top vector with its length.
std::vector<std::pair<Vector, int>> chain_tops(const Matrix& nil, double tol) {
  const int m = static_cast<int>(nil.rows());
  std::vector<Matrix> kernels(m + 1);
  kernels[0] = Matrix(m, 0);
  Matrix power = Matrix::Identity(m, m);
  int index = m;
  for (int k = 1; k <= m; ++k) {
    power = nil * power;
    kernels[k] = null_space(power, tol);
    if (kernels[k].cols() < kernels[k - 1].cols()) {
      throw NumericalFailure("jordan_structure", "kernel dimensions of the nilpotent part are not monotone");
    }
    if (kernels[k].cols() == m) {
      index = k;
      break;
    }
  }
  if (kernels[index].cols() != m) {
    throw NumericalFailure("jordan_structure",
                           "generalized eigenspace does not match the algebraic multiplicity");
  }

  std::vector<std::pair<Vector, int>> tops;
  auto chains_at_least = [&](int k) -> long {
    if (k > index) return 0;
    return kernels[k].cols() - kernels[k - 1].cols();
  };
  for (int k = index; k >= 1; --k) {
    const long fresh = chains_at_least(k) - chains_at_least(k + 1);
    if (fresh <= 0) continue;
    Matrix covered(m, kernels[k - 1].cols() + static_cast<long>(tops.size()));
    covered.leftCols(kernels[k - 1].cols()) = kernels[k - 1];
    long col = kernels[k - 1].cols();
    for (const auto& [top, length] : tops) {
      Vector level = top;
      for (int j = 0; j < length - k; ++j) level = nil * level;
      covered.col(col++) = level;
    }
    const Matrix q = orthonormal_span(covered);
    const Matrix residual = kernels[k] - q * (q.transpose() * kernels[k]);
    Eigen::JacobiSVD<Matrix> svd(residual, Eigen::ComputeThinU);
    if (svd.singularValues().size() < fresh || svd.singularValues()(fresh - 1) < 1e-6) {
      throw NumericalFailure("jordan_structure", "could not extend Jordan chains");
    }
    for (long j = 0; j < fresh; ++j) tops.emplace_back(svd.matrixU().col(j), k);
  }
  return tops;
}

}  // namespace

std::vector<std::string> HypothesisReport::violations() const {
  std::vector<std::string> out;
  if (!real_spectrum) out.emplace_back("complex_spectrum");
  if (!xi1_alg_simple || !xi1_geom_simple) out.emplace_back("xi1_not_simple");
  if (!x1_nonzero_components) out.emplace_back("x1_zero_component");
  if (!xi1_positive) out.emplace_back("xi1_not_positive");
  return out;
}

std::vector<int> CouplingMatrix::block_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(blocks_.size());
  for (const JordanBlock& b : blocks_) sizes.push_back(b.size);
  return sizes;
}

double CouplingMatrix::reconstruction_error() const {
  const Matrix rebuilt = p_ * jordan_ * p_inv_;
  const double norm = entries_.cwiseAbs().maxCoeff();
  const double diff = (entries_ - rebuilt).cwiseAbs().maxCoeff();
  return norm > 0.0 ? diff / norm : diff;
}

CouplingMatrix CouplingMatrix::with_flipped_x1() const {
  CouplingMatrix out = *this;
  out.p_.col(0) *= -1.0;
  out.p_inv_.row(0) *= -1.0;
  out.x1_scale_ = -x1_scale_;
  return out;
}

std::vector<double> characteristic_polynomial(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  // det(xI - A) = sum_k (-1)^(n-k) E_{n-k} x^k, E_j = sum of j x j principal minors.
  std::vector<double> minor_sums(n + 1, 0.0);
  minor_sums[0] = 1.0;
  const unsigned subsets = 1u << n;
  for (unsigned mask = 1; mask < subsets; ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    const int k = static_cast<int>(idx.size());
    Matrix sub(k, k);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) sub(r, c) = a(idx[r], idx[c]);
    }
    minor_sums[k] += sub.determinant();
  }
  std::vector<double> coeffs(n + 1);
  for (int k = 0; k <= n; ++k) {
    const int j = n - k;
    coeffs[k] = (j % 2 == 0 ? 1.0 : -1.0) * minor_sums[j];
  }
  return coeffs;
}

double evaluate_polynomial(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

CouplingMatrix analyze(const Matrix& entries, double tol) {
  validate_input(entries, tol);
  const int n = static_cast<int>(entries.rows());
  const double scale = matrix_scale(entries);
  const std::vector<Cluster> clusters = compute_clusters(entries, tol);

  for (const Cluster& c : clusters) {
    if (!is_real(c, scale, tol)) {
      throw HypothesisViolation("complex_spectrum", "coupling matrix has a non-real eigenvalue");
    }
  }
  if (clusters.front().size > 1) {
    throw HypothesisViolation("xi1_not_simple", "largest eigenvalue is not algebraically simple");
  }

  CouplingMatrix cm;
  cm.entries_ = entries;
  cm.tol_ = tol;
  cm.eigenvalues_.resize(n);
  cm.p_.resize(n, n);
  cm.jordan_ = Matrix::Zero(n, n);

  int column = 0;
  bool first_cluster = true;
  for (const Cluster& c : clusters) {
    const int m = c.size;
    double xi = c.value.real();
    double gap = scale;
    for (const Cluster& other : clusters) {
      if (&other != &c) gap = std::min(gap, std::abs(other.value.real() - xi));
    }
    const Matrix basis = invariant_subspace(entries, xi, m, gap);
    xi = (basis.transpose() * entries * basis).trace() / m;
    const Matrix shifted = entries - xi * Matrix::Identity(n, n);
    const Matrix nil = basis.transpose() * shifted * basis;

    const auto tops = chain_tops(nil, tol);
    if (first_cluster && tops.size() != 1) {
      throw HypothesisViolation("xi1_not_simple", "largest eigenvalue is not geometrically simple");
    }
    for (const auto& [top, length] : tops) {
      Vector v = basis * top;
      const double lead = v(leading_index(v));
      if (first_cluster) cm.x1_scale_ = 1.0 / lead;
      v /= lead;
      cm.blocks_.push_back({xi, column, length});
      for (int j = 0; j < length; ++j) {
        cm.p_.col(column + j) = v;
        cm.eigenvalues_(column + j) = xi;
        cm.jordan_(column + j, column + j) = xi;
        if (j + 1 < length) cm.jordan_(column + j + 1, column + j) = 1.0;
        v = shifted * v;
      }
      column += length;
    }
    first_cluster = false;
  }

  const Eigen::FullPivLU<Matrix> lu(cm.p_);
  if (!lu.isInvertible()) {
    throw NumericalFailure("jordan_structure", "change-of-basis matrix is singular");
  }
  cm.p_inv_ = lu.inverse();

  HypothesisReport& r = cm.report_;
  r.real_spectrum = true;
  r.xi1_alg_simple = true;
  r.xi1_geom_simple = true;
  r.xi1_positive = cm.xi1() > 0.0;
  r.x1_nonzero_components = cm.p_.col(0).cwiseAbs().minCoeff() > tol;
  return cm;
}

HypothesisReport check_hypotheses(const Matrix& entries, double tol) {
  validate_input(entries, tol);
  const double scale = matrix_scale(entries);
  const std::vector<Cluster> clusters = compute_clusters(entries, tol);
  HypothesisReport r;
  r.real_spectrum = std::all_of(clusters.begin(), clusters.end(), [&](const Cluster& c) {
    return is_real(c, scale, tol);
  });
  r.xi1_positive = clusters.front().value.real() > 0.0;
  if (!r.real_spectrum || clusters.front().size > 1) return r;
  try {
    return analyze(entries, tol).hypotheses();
  } catch (const HypothesisViolation&) {
    r.xi1_alg_simple = true;
    return r;
  }
}

void require_hypotheses(const CouplingMatrix& cm) {
  const auto violations = cm.hypotheses().violations();
  if (!violations.empty()) {
    throw HypothesisViolation(violations.front(), "coupling matrix violates hypothesis: " + violations.front());
  }
}

double principal_system_eigenvalue(const CouplingMatrix& cm, double lambda1) { return lambda1 - cm.xi1(); }

}  // namespace signlab
