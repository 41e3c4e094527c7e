#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "signlab/system_solver.hpp"

namespace signlab {

enum class Side { kBelow, kAbove };

std::string to_string(Side side);

/// Assumption on the first transformed source component f~1.
struct Hf1Check {
  bool strict = false;  ///< f~1 >= 0 and f~1 not identically 0 (dead-band rule)
  bool weak = false;    ///< <f~1, phi1> > 0
  double f_tilde_1_phi1 = 0.0;
};

Hf1Check check_hf1(const CouplingMatrix& cm, const std::vector<GridFunction>& f, const DomainSpectrum& spectrum);

struct Prediction {
  Side side = Side::kBelow;
  std::vector<Sign> signs;
  bool valid = true;  ///< false when |mu - mu11| is outside the caller's window
};

/// sign(p_i1) below mu11, -sign(p_i1) above. Throws AtEigenvalue when
/// |mu - mu11| < kAtEigenvalueBand.
Prediction predict(const CouplingMatrix& cm, double mu, const DomainSpectrum& spectrum,
                   std::optional<double> window = std::nullopt);

inline constexpr double kAtEigenvalueBand = 1e-10;

struct SignReport {
  double mu = 0.0;
  Side side = Side::kBelow;
  std::vector<Sign> predicted;
  std::vector<Sign> observed_interior;
  std::vector<Sign> observed_normal;
  bool hypothesis_hf1 = false;
  bool hf1_strict = false;
  bool hf1_weak = false;
  bool match = false;
  double deadband = kSignDeadband;

  bool operator==(const SignReport&) const = default;
};

/// X1 may be scaled by any nonzero factor. Returns cm with X1 negated when
/// <f~1, phi1> is below -1e-9 ||f~1||, so that f~1 leans positive.
CouplingMatrix orient_to_source(const CouplingMatrix& cm, const std::vector<GridFunction>& f,
                                const DomainSpectrum& spectrum);

/// Compares observed component signs with the prediction, after
/// orient_to_source. The dead-band reference is the largest max|u_i| over
/// all components.
SignReport verify(const SystemProblem& problem, const SystemSolution& solution);

struct DeltaSearch {
  double lower_offset = 1e-6;
  double bracket = 1e-6;
  double cap_margin = 1e-3;
};

struct SystemDeltaEstimate {
  double delta = 0.0;       ///< largest offset at which the pattern was verified
  double bracket_hi = 0.0;  ///< smallest offset at which it was seen to fail
  double cap = 0.0;
  bool capped = false;
};

/// Search cap min{xi1 - xi2, lambda2 - lambda1} - margin (xi1 - xi2 is
/// dropped when n == 1).
double delta_search_cap(const CouplingMatrix& cm, const DomainSpectrum& spectrum, double margin);

/// Bisection on |mu - mu11| for the extent of the matching sign pattern on
/// one side, after orient_to_source. Throws HypothesisViolation "hf1_not_satisfied" or PatternAbsent.
SystemDeltaEstimate empirical_delta_system(const CouplingMatrix& cm, const std::vector<GridFunction>& f,
                                           const DomainSpectrum& spectrum, Side side,
                                           const DeltaSearch& search = {});

/// Closed-form data of a 2 x 2 matrix [[a, b], [c, d]] with b > 0, c < 0.
struct TwoByTwoData {
  double a = 0, b = 0, c = 0, d = 0;
  double discriminant = 0;  ///< (a - d)^2 + 4bc
  double xi1 = 0, xi2 = 0;
  double mu_minus = 0, mu_plus = 0;  ///< lambda1 - xi1, lambda1 - xi2
  double t_star = 0;                 ///< (d - a + sqrt(D)) / (-2c)
  Matrix p;
  Matrix p_inv;

  Matrix matrix() const;
};

/// Throws HypothesisViolation "H1" naming every failing condition.
TwoByTwoData annex_2x2(double a, double b, double c, double d, const DomainSpectrum& spectrum);

/// The three sign results known for the 2 x 2 system.
enum class AnnexTheorem {
  kMixedAbove,     ///< d < a, f, g >= 0, mu just above mu-: u < 0 < v
  kNegativeAbove,  ///< a < d, f <= 0 <= g, mu just above mu-: u, v < 0
  kPositiveBelow,  ///< a < d, f, g >= 0, t* g - f >= 0, mu < mu-: u, v > 0
};

std::string to_string(AnnexTheorem t);

struct AnnexVerdict {
  AnnexTheorem theorem = AnnexTheorem::kMixedAbove;
  double mu = 0.0;
  std::array<Sign, 2> expected_interior{};
  std::array<Sign, 2> expected_normal{};
  std::array<Sign, 2> observed_interior{};
  std::array<Sign, 2> observed_normal{};
  std::vector<Sign> general_prediction;
  bool conclusion_holds = false;
  bool agrees_with_prediction = false;
};

/// Checks the theorem's assumptions (HypothesisNotMet naming the clause),
/// solves the system and compares the observed signs with its conclusion
/// and with predict().
AnnexVerdict annex_theorem_check(const TwoByTwoData& data, AnnexTheorem theorem, const GridFunction& f,
                                 const GridFunction& g, double mu, const DomainSpectrum& spectrum);

}  // namespace signlab
