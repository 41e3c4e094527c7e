#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace signlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative tolerance for eigenvalue clustering and zero tests.
inline constexpr double kDefaultMatrixTol = 1e-8;

/// Outcome of the structural checks on the coupling matrix.
struct HypothesisReport {
  bool real_spectrum = false;
  bool xi1_positive = false;
  bool xi1_alg_simple = false;
  bool xi1_geom_simple = false;
  bool x1_nonzero_components = false;

  bool verdict() const {
    return real_spectrum && xi1_positive && xi1_alg_simple && xi1_geom_simple &&
           x1_nonzero_components;
  }

  /// Violation codes for every flag that is not set, in a fixed order.
  std::vector<std::string> violations() const;
};

/// One lower-triangular Jordan block: `eigenvalue` on the diagonal, ones on
/// the first subdiagonal, occupying rows/columns [start, start + size).
struct JordanBlock {
  double eigenvalue = 0.0;
  int start = 0;
  int size = 1;
};

/// A real coupling matrix together with its ordered spectrum and the
/// decomposition entries = p * jordan * p_inv.
///
/// Column 0 of `p` is the principal eigenvector X1, normalized so that its
/// first component of largest magnitude is +1. Chains inside a block satisfy
/// (A - xi) p_j = p_{j+1}; the last vector of each chain is an eigenvector.
class CouplingMatrix {
 public:
  int size() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  /// Non-increasing, each eigenvalue repeated by its algebraic multiplicity.
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& p() const { return p_; }
  const Matrix& p_inv() const { return p_inv_; }
  const Matrix& jordan() const { return jordan_; }
  const std::vector<JordanBlock>& blocks() const { return blocks_; }
  std::vector<int> block_sizes() const;

  double xi1() const { return eigenvalues_(0); }
  /// Largest eigenvalue strictly below xi1, or xi1 itself when n == 1.
  double xi2() const { return size() > 1 ? eigenvalues_(1) : eigenvalues_(0); }
  Vector x1() const { return p_.col(0); }
  /// Factor applied to the raw unit-norm eigenvector to obtain x1().
  double x1_scale() const { return x1_scale_; }
  const HypothesisReport& hypotheses() const { return report_; }
  double tolerance() const { return tol_; }

  /// max |A - P J P^-1| / max |A|.
  double reconstruction_error() const;

  /// Same decomposition with X1 negated and row 0 of P^-1 negated to
  /// compensate. Used to check that sign conclusions do not depend on it.
  CouplingMatrix with_flipped_x1() const;

 private:
  friend CouplingMatrix analyze(const Matrix& entries, double tol);

  Matrix entries_;
  Vector eigenvalues_;
  Matrix p_;
  Matrix p_inv_;
  Matrix jordan_;
  std::vector<JordanBlock> blocks_;
  double x1_scale_ = 1.0;
  HypothesisReport report_;
  double tol_ = kDefaultMatrixTol;
};

/// Computes the ordered spectrum and the Jordan decomposition of `entries`.
///
/// Eigenvalues whose computed values lie within a cluster radius of each
/// other are treated as one multiple eigenvalue; the radius grows with the
/// cluster size to absorb the splitting of defective eigenvalues under
/// rounding, and is never below tol * max(1, max|a_ij|).
///
/// Throws HypothesisViolation "complex_spectrum" or "xi1_not_simple".
/// "xi1_not_positive" and "x1_zero_component" are only flagged in
/// hypotheses(); use require_hypotheses() to make them fatal.
CouplingMatrix analyze(const Matrix& entries, double tol = kDefaultMatrixTol);

/// Non-throwing structural checks. Never fails on well-formed square input.
HypothesisReport check_hypotheses(const Matrix& entries, double tol = kDefaultMatrixTol);

/// Throws HypothesisViolation for the first unset flag of cm.hypotheses().
void require_hypotheses(const CouplingMatrix& cm);

/// mu_11 = lambda1 - xi1.
double principal_system_eigenvalue(const CouplingMatrix& cm, double lambda1);

/// Coefficients c_0..c_n of det(x I - A) = sum c_k x^k (c_n = 1), from
/// sums of principal minors. Cost grows as 2^n; intended for small n.
std::vector<double> characteristic_polynomial(const Matrix& a);

double evaluate_polynomial(const std::vector<double>& coeffs, double x);

}  // namespace signlab
