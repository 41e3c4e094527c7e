#include "signlab/scalar_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "signlab/error.hpp"

namespace signlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// 8 eps ||L - sigma||_inf: the operator perturbation of a backward-stable solve.
double roundoff_gain(double sigma, const DomainSpectrum& spectrum) {
  return 8 * kEps * (spectrum.laplacian->norm_inf() + std::abs(sigma));
}

}  // namespace

double default_q(int dimension) { return 2.0 * dimension + 1.0; }

GroundstateSplit split(const GridFunction& h, const DomainSpectrum& spectrum, double q) {
  if (!(q >= 2.0)) throw ConfigError("invalid_q", "norm exponent q must be at least 2");
  GroundstateSplit s;
  s.q = q;
  s.h1 = inner(h, spectrum.phi1);
  s.h_perp = h;
  s.h_perp.add_scaled(-s.h1, spectrum.phi1);
  s.q_norm_perp = lq_norm(s.h_perp, q);
  return s;
}

ScalarSolution solve_scalar(double sigma, const GridFunction& h, const DomainSpectrum& spectrum) {
  ScalarSolution out;
  out.sigma = sigma;
  out.z = solve_shifted(sigma, h, spectrum);
  out.z1 = inner(out.z, spectrum.phi1);
  out.z_perp = out.z;
  out.z_perp.add_scaled(-out.z1, spectrum.phi1);

  const double expected = inner(h, spectrum.phi1) / (spectrum.lambda1 - sigma);
  // A backward-stable solve perturbs the operator by about eps * ||L - sigma||,
  // which moves the groundstate coefficient by that amount over |lambda1 - sigma|.
  const double rel = std::max(kGroundstateRelTol, roundoff_gain(sigma, spectrum) / std::abs(spectrum.lambda1 - sigma));
  // Absolute slack for data with a negligible groundstate component.
  const double slack = rel * std::max(std::abs(expected), l2_norm(out.z));
  if (std::abs(out.z1 - expected) > slack) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "groundstate coefficient " << out.z1 << " differs from h1/(lambda1 - sigma) = " << expected;
    throw NumericalFailure("groundstate_mismatch", msg.str());
  }
  return out;
}

PerpBoundCheck check_perp_bound(const GroundstateSplit& s, const ScalarSolution& solution,
                                const DomainSpectrum& spectrum) {
  PerpBoundCheck out;
  const double gap = spectrum.lambda2 - spectrum.lambda1;
  const double h_perp_norm = l2_norm(s.h_perp);
  const double bound = h_perp_norm / gap;
  const double achieved = l2_norm(solution.z_perp);
  const double floor = roundoff_gain(solution.sigma, spectrum) * l2_norm(solution.z) / (spectrum.lambda2 - solution.sigma);
  out.holds = achieved <= bound * (1.0 + 1e-6) + floor;
  const double h_norm = std::hypot(s.h1, h_perp_norm);
  out.ratio = h_perp_norm > 64 * kEps * h_norm ? achieved / bound : 0.0;
  return out;
}

bool antimaximum_pattern(const GridFunction& z) {
  return interior_sign(z) == Sign::kNegative && boundary_sign(z) == Sign::kPositive;
}

bool maximum_pattern(const GridFunction& z) {
  return interior_sign(z) == Sign::kPositive && boundary_sign(z) == Sign::kNegative;
}

AmpEstimate estimate_amp_interval(const GridFunction& h, const DomainSpectrum& spectrum, const AmpSearch& search) {
  const GroundstateSplit s = split(h, spectrum, search.q);
  if (!(s.h1 > kSignDeadband * l2_norm(h))) {
    throw HypothesisViolation("h1_nonpositive", "groundstate coefficient of the data must be positive");
  }
  auto holds = [&](double sigma) { return antimaximum_pattern(solve_shifted(sigma, h, spectrum)); };

  double lo = spectrum.lambda1 + search.lower_offset;
  double hi = spectrum.lambda2 - search.upper_margin;
  if (!(hi > lo)) throw ConfigError("invalid_search", "empty search interval above lambda1");
  if (!holds(lo)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "antimaximum pattern absent at sigma = " << lo;
    throw PatternAbsent(msg.str());
  }

  AmpEstimate out;
  out.h1 = s.h1;
  out.q_norm_perp = s.q_norm_perp;
  if (holds(hi)) {
    out.capped = true;
    lo = hi;
  } else {
    while (hi - lo > search.bracket) {
      const double mid = 0.5 * (lo + hi);
      if (holds(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.mu_threshold = 0.5 * (lo + hi);
  out.delta_empirical = out.mu_threshold - spectrum.lambda1;
  out.delta_formula_ratio = out.delta_empirical * s.q_norm_perp / s.h1;
  return out;
}

}  // namespace signlab
