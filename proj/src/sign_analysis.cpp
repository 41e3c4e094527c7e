#include "signlab/sign_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "signlab/error.hpp"

namespace signlab {

std::string to_string(Side side) { return side == Side::kBelow ? "below" : "above"; }

std::string to_string(AnnexTheorem t) {
  switch (t) {
    case AnnexTheorem::kMixedAbove:
      return "mixed_above";
    case AnnexTheorem::kNegativeAbove:
      return "negative_above";
    case AnnexTheorem::kPositiveBelow:
      return "positive_below";
  }
  return "unknown";
}

Hf1Check check_hf1(const CouplingMatrix& cm, const std::vector<GridFunction>& f, const DomainSpectrum& spectrum) {
  const std::vector<GridFunction> f_tilde = transform_source(cm, f);
  const GridFunction& first = f_tilde.front();
  const double band = kSignDeadband * first.max_abs();
  Hf1Check out;
  out.strict = first.max_abs() > 0.0 && first.min() >= -band && first.max() > band;
  out.f_tilde_1_phi1 = inner(first, spectrum.phi1);
  out.weak = out.f_tilde_1_phi1 > kSignDeadband * l2_norm(first);
  return out;
}

CouplingMatrix orient_to_source(const CouplingMatrix& cm, const std::vector<GridFunction>& f,
                                const DomainSpectrum& spectrum) {
  const GridFunction first = transform_source(cm, f).front();
  if (inner(first, spectrum.phi1) < -kSignDeadband * l2_norm(first)) return cm.with_flipped_x1();
  return cm;
}

Prediction predict(const CouplingMatrix& cm, double mu, const DomainSpectrum& spectrum, std::optional<double> window) {
  const double mu11 = principal_system_eigenvalue(cm, spectrum.lambda1);
  if (std::abs(mu - mu11) < kAtEigenvalueBand) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "mu = " << mu << " is at the principal eigenvalue " << mu11;
    throw AtEigenvalue(msg.str());
  }
  Prediction out;
  out.side = mu < mu11 ? Side::kBelow : Side::kAbove;
  const Vector x1 = cm.x1();
  // Zero test on the column relative to its largest entry.
  const double band = cm.tolerance() * x1.cwiseAbs().maxCoeff();
  for (int i = 0; i < x1.size(); ++i) {
    const Sign s = sign_of(x1(i), band);
    out.signs.push_back(out.side == Side::kBelow ? s : negate(s));
  }
  out.valid = !window || std::abs(mu - mu11) < *window;
  return out;
}

SignReport verify(const SystemProblem& problem, const SystemSolution& solution) {
  const CouplingMatrix cm = orient_to_source(problem.cm, problem.f, problem.spectrum);
  const Prediction prediction = predict(cm, problem.mu, problem.spectrum);
  const Hf1Check hf1 = check_hf1(cm, problem.f, problem.spectrum);
  double reference = 0.0;
  for (const GridFunction& u : solution.u) reference = std::max(reference, u.max_abs());

  SignReport r;
  r.mu = problem.mu;
  r.side = prediction.side;
  r.predicted = prediction.signs;
  r.hf1_strict = hf1.strict;
  r.hf1_weak = hf1.weak;
  r.hypothesis_hf1 = hf1.weak;
  r.match = true;
  for (std::size_t i = 0; i < solution.u.size(); ++i) {
    const Sign interior = interior_sign(solution.u[i], reference);
    const Sign normal = boundary_sign(solution.u[i], reference);
    r.observed_interior.push_back(interior);
    r.observed_normal.push_back(normal);
    if (interior == Sign::kMixed || interior != r.predicted[i] || normal != negate(interior)) r.match = false;
  }
  return r;
}

double delta_search_cap(const CouplingMatrix& cm, const DomainSpectrum& spectrum, double margin) {
  double eps = spectrum.lambda2 - spectrum.lambda1;
  if (cm.size() > 1) eps = std::min(eps, cm.xi1() - cm.xi2());
  return eps - margin;
}

SystemDeltaEstimate empirical_delta_system(const CouplingMatrix& input, const std::vector<GridFunction>& f,
                                           const DomainSpectrum& spectrum, Side side, const DeltaSearch& search) {
  const CouplingMatrix cm = orient_to_source(input, f, spectrum);
  if (!check_hf1(cm, f, spectrum).weak) {
    throw HypothesisViolation("hf1_not_satisfied", "<f~1, phi1> must be positive");
  }
  const double mu11 = principal_system_eigenvalue(cm, spectrum.lambda1);
  const double direction = side == Side::kBelow ? -1.0 : 1.0;
  auto matches = [&](double offset) {
    const SystemProblem problem = make_problem(cm, mu11 + direction * offset, f, spectrum);
    return verify(problem, solve_jordan(problem)).match;
  };

  SystemDeltaEstimate out;
  out.cap = delta_search_cap(cm, spectrum, search.cap_margin);
  double lo = search.lower_offset;
  double hi = out.cap;
  if (!(hi > lo)) throw ConfigError("invalid_search", "empty search interval around mu11");
  if (!matches(lo)) {
    std::ostringstream msg;
    msg << "sign pattern absent at offset " << lo << " " << to_string(side) << " mu11";
    throw PatternAbsent(msg.str());
  }
  if (matches(hi)) {
    out.capped = true;
    out.delta = hi;
    out.bracket_hi = hi;
    return out;
  }
  while (hi - lo > search.bracket) {
    const double mid = 0.5 * (lo + hi);
    if (matches(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.delta = lo;
  out.bracket_hi = hi;
  return out;
}

Matrix TwoByTwoData::matrix() const {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

TwoByTwoData annex_2x2(double a, double b, double c, double d, const DomainSpectrum& spectrum) {
  TwoByTwoData t;
  t.a = a;
  t.b = b;
  t.c = c;
  t.d = d;
  t.discriminant = (a - d) * (a - d) + 4.0 * b * c;
  std::vector<std::string> failing;
  if (!(b > 0.0)) failing.emplace_back("b <= 0");
  if (!(c < 0.0)) failing.emplace_back("c >= 0");
  if (!(t.discriminant > 0.0)) failing.emplace_back("D <= 0");
  if (!failing.empty()) {
    std::string msg = "H1 fails:";
    for (const auto& f : failing) msg += " " + f + ";";
    throw HypothesisViolation("H1", msg);
  }
  const double root = std::sqrt(t.discriminant);
  t.xi1 = 0.5 * (a + d + root);
  t.xi2 = 0.5 * (a + d - root);
  t.mu_minus = spectrum.lambda1 - t.xi1;
  t.mu_plus = spectrum.lambda1 - t.xi2;
  t.t_star = (d - a + root) / (-2.0 * c);
  t.p.resize(2, 2);
  t.p << b, b, t.xi1 - a, t.xi2 - a;
  t.p_inv.resize(2, 2);
  t.p_inv << a - t.xi2, b, t.xi1 - a, -b;
  t.p_inv /= b * (t.xi1 - t.xi2);
  return t;
}

namespace {

void require(bool condition, const std::string& clause, const std::string& message) {
  if (!condition) throw HypothesisNotMet(clause, message);
}

}  // namespace

AnnexVerdict annex_theorem_check(const TwoByTwoData& data, AnnexTheorem theorem, const GridFunction& f,
                                 const GridFunction& g, double mu, const DomainSpectrum& spectrum) {
  const double band = kSignDeadband * std::max(f.max_abs(), g.max_abs());
  const bool f_nonneg = f.min() >= -band;
  const bool f_nonpos = f.max() <= band;
  const bool g_nonneg = g.min() >= -band;
  require(f.max_abs() > band && g.max_abs() > band, "nontrivial_data", "f and g must not vanish identically");

  AnnexVerdict v;
  v.theorem = theorem;
  v.mu = mu;
  using enum Sign;
  switch (theorem) {
    case AnnexTheorem::kMixedAbove:
      require(data.d < data.a, "d_less_than_a", "requires d < a");
      require(mu > data.mu_minus && mu < data.mu_plus, "mu_range", "requires mu- < mu < mu+");
      require(f_nonneg && g_nonneg, "data_sign", "requires f >= 0 and g >= 0");
      v.expected_interior = {kNegative, kPositive};
      break;
    case AnnexTheorem::kNegativeAbove:
      require(data.a < data.d, "a_less_than_d", "requires a < d");
      require(mu > data.mu_minus && mu < data.mu_plus, "mu_range", "requires mu- < mu < mu+");
      require(f_nonpos && g_nonneg, "data_sign", "requires f <= 0 and g >= 0");
      v.expected_interior = {kNegative, kNegative};
      break;
    case AnnexTheorem::kPositiveBelow: {
      require(data.a < data.d, "a_less_than_d", "requires a < d");
      require(mu < data.mu_minus, "mu_range", "requires mu < mu-");
      require(f_nonneg && g_nonneg, "data_sign", "requires f >= 0 and g >= 0");
      GridFunction combo = data.t_star * g;
      combo -= f;
      const double combo_band = kSignDeadband * std::max(combo.max_abs(), band);
      require(combo.min() >= -combo_band && combo.max() > combo_band, "t_star_condition",
              "requires t* g - f >= 0 and not identically 0");
      v.expected_interior = {kPositive, kPositive};
      break;
    }
  }
  v.expected_normal = {negate(v.expected_interior[0]), negate(v.expected_interior[1])};

  const CouplingMatrix cm = analyze(data.matrix());
  const SystemProblem problem = make_problem(cm, mu, {f, g}, spectrum);
  const SystemSolution solution = solve_jordan(problem);
  const double reference = std::max(solution.u[0].max_abs(), solution.u[1].max_abs());
  for (int i = 0; i < 2; ++i) {
    v.observed_interior[i] = interior_sign(solution.u[i], reference);
    v.observed_normal[i] = boundary_sign(solution.u[i], reference);
  }
  v.conclusion_holds = v.observed_interior == v.expected_interior && v.observed_normal == v.expected_normal;
  v.general_prediction = predict(cm, mu, spectrum).signs;
  v.agrees_with_prediction =
      v.general_prediction.size() == 2 && v.general_prediction[0] == v.expected_interior[0] &&
      v.general_prediction[1] == v.expected_interior[1];
  return v;
}

}  // namespace signlab
