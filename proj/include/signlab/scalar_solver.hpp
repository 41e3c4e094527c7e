#pragma once

#include "signlab/domain_laplacian.hpp"

namespace signlab {

/// h = h1 * phi1 + h_perp with <h_perp, phi1> = 0.
struct GroundstateSplit {
  double h1 = 0.0;
  GridFunction h_perp;
  double q = 2.0;
  double q_norm_perp = 0.0;
};

/// 2 * dimension + 1, the smallest odd integer exponent above the dimension.
double default_q(int dimension);

/// Throws ConfigError when q < 2.
GroundstateSplit split(const GridFunction& h, const DomainSpectrum& spectrum, double q);

struct ScalarSolution {
  GridFunction z;
  double z1 = 0.0;  ///< <z, phi1>
  GridFunction z_perp;
  double sigma = 0.0;
};

inline constexpr double kGroundstateRelTol = 1e-8;

/// Solves -Delta_h z = sigma z + h and splits z along phi1. Throws
/// NumericalFailure "groundstate_mismatch" when z1 departs from
/// h1 / (lambda1 - sigma) by more than 1e-8 relative, widened to
/// 8 eps ||L - sigma|| / |lambda1 - sigma| close to lambda1.
ScalarSolution solve_scalar(double sigma, const GridFunction& h, const DomainSpectrum& spectrum);

struct PerpBoundCheck {
  bool holds = false;
  /// ||z_perp|| / (||h_perp|| / (lambda2 - lambda1)); 0 when h_perp vanishes.
  double ratio = 0.0;
};

/// ||z_perp||_L2 <= ||h_perp||_L2 / (lambda2 - lambda1) * (1 + 1e-6), plus
/// the rounding floor 8 eps ||L - sigma|| ||z|| / (lambda2 - sigma).
PerpBoundCheck check_perp_bound(const GroundstateSplit& s, const ScalarSolution& solution,
                                const DomainSpectrum& spectrum);

/// True when z < 0 at every interior node and every outward normal
/// derivative is positive (dead-band rule on max|z|).
bool antimaximum_pattern(const GridFunction& z);
/// True when z > 0 at every interior node and every outward normal
/// derivative is negative.
bool maximum_pattern(const GridFunction& z);

struct AmpEstimate {
  double mu_threshold = 0.0;   ///< midpoint of the final bisection bracket
  double bracket_lo = 0.0;     ///< largest sigma where the pattern was observed
  double bracket_hi = 0.0;     ///< smallest sigma where it was seen to fail
  double delta_empirical = 0.0;
  double delta_formula_ratio = 0.0;
  double h1 = 0.0;
  double q_norm_perp = 0.0;
  bool capped = false;  ///< pattern still held at the top of the search range
};

struct AmpSearch {
  double q = 3.0;
  double lower_offset = 1e-6;  ///< search starts at lambda1 + lower_offset
  double upper_margin = 1e-3;  ///< search ends at lambda2 - upper_margin
  double bracket = 1e-6;
};

/// Bisection in sigma above lambda1 for the end of the antimaximum range.
/// Throws HypothesisViolation "h1_nonpositive" (h1 <= 1e-9 ||h||) and PatternAbsent.
AmpEstimate estimate_amp_interval(const GridFunction& h, const DomainSpectrum& spectrum, const AmpSearch& search);

}  // namespace signlab
