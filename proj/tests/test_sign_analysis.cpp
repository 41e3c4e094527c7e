#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "signlab/error.hpp"
#include "signlab/sign_analysis.hpp"

using namespace signlab;
using enum Sign;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

const DomainSpectrum& spectrum1d() {
  static const DomainSpectrum s = [] {
    const std::array<double, 1> e{1.0};
    const std::array<int, 1> r{99};
    return leading_eigenpairs(build_grid(1, e, r));
  }();
  return s;
}

// F = P F~ for a prescribed transformed source.
std::vector<GridFunction> pull_back(const CouplingMatrix& cm, std::vector<GridFunction> f_tilde) {
  return combine(cm.p(), f_tilde);
}

SignReport report(const CouplingMatrix& cm, double mu, const std::vector<GridFunction>& f) {
  const SystemProblem p = make_problem(cm, mu, f, spectrum1d());
  return verify(p, solve_jordan(p));
}

const Matrix kExample = mat({{2, 1}, {-0.5, 0}});

}  // namespace

TEST_CASE("HF1 examples") {
  const DomainSpectrum& s = spectrum1d();
  const CouplingMatrix cm = analyze(mat({{3, 1, 0}, {-0.4, 1, 0.2}, {0.1, 0, -1}}));
  const GridFunction zero(s.grid());

  const Hf1Check a = check_hf1(cm, pull_back(cm, {s.phi1, zero, zero}), s);
  CHECK(a.strict);
  CHECK(a.weak);
  CHECK(a.f_tilde_1_phi1 == doctest::Approx(1.0).epsilon(1e-12));

  const Hf1Check b = check_hf1(cm, pull_back(cm, {s.phi2, zero, zero}), s);
  CHECK_FALSE(b.strict);
  CHECK_FALSE(b.weak);
  CHECK(std::abs(b.f_tilde_1_phi1) < 1e-12);

  // d < a with nonnegative data: f~1 is a positive combination of f and g.
  const CouplingMatrix two = analyze(kExample);
  const GridFunction f = sample(s.grid(), [](double x, double) { return x; });
  const GridFunction g = sample(s.grid(), [](double x, double) { return 1.0 - x; });
  const Hf1Check c = check_hf1(two, {f, g}, s);
  CHECK(c.strict);
  CHECK(c.weak);
}

TEST_CASE("predict examples") {
  const DomainSpectrum& s = spectrum1d();
  const CouplingMatrix cm = analyze(kExample);
  const double mu11 = principal_system_eigenvalue(cm, s.lambda1);
  CHECK(predict(cm, mu11 - 0.05, s).signs == std::vector<Sign>{kPositive, kNegative});
  CHECK(predict(cm, mu11 - 0.05, s).side == Side::kBelow);
  CHECK(predict(cm, mu11 + 0.05, s).signs == std::vector<Sign>{kNegative, kPositive});
  CHECK(predict(cm, mu11 + 0.05, s).side == Side::kAbove);
  CHECK_THROWS_AS(predict(cm, mu11 + 1e-11, s), AtEigenvalue);
  CHECK(predict(cm, mu11 + 0.05, s, 0.1).valid);
  CHECK_FALSE(predict(cm, mu11 + 0.5, s, 0.1).valid);

  const CouplingMatrix diag = analyze(mat({{2, 0}, {0, 1}}));
  CHECK(predict(diag, 0.0, s).signs == std::vector<Sign>{kPositive, kZero});
}

TEST_CASE("property: predictions flip across mu11") {
  const DomainSpectrum& s = spectrum1d();
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::Constructed c = oracle::construct({{3.0, 1}, {1.0, trial % 2 + 1}, {-1.0, 1}}, rng);
    const CouplingMatrix cm = analyze(c.a);
    const double mu11 = principal_system_eigenvalue(cm, s.lambda1);
    const std::vector<Sign> below = predict(cm, mu11 - 0.3, s).signs;
    const std::vector<Sign> above = predict(cm, mu11 + 0.3, s).signs;
    REQUIRE(below.size() == above.size());
    for (std::size_t i = 0; i < below.size(); ++i) CHECK(above[i] == negate(below[i]));
  }
}

TEST_CASE("verify examples") {
  const DomainSpectrum& s = spectrum1d();
  const CouplingMatrix cm = analyze(kExample);
  const double mu11 = principal_system_eigenvalue(cm, s.lambda1);
  const std::vector<GridFunction> f{s.phi1, s.phi1};

  // f~1 = ((a - xi2) + b) phi1 / (b (xi1 - xi2)) with P column (b, xi1 - a).
  const double s1 = cm.p()(0, 0);
  const double closed = (2.0 - cm.xi2() + 1.0) / (cm.xi1() - cm.xi2());
  CHECK(check_hf1(cm, f, s).f_tilde_1_phi1 * s1 == doctest::Approx(closed).epsilon(1e-12));
  CHECK(closed == doctest::Approx(2.70711 / 1.41421).epsilon(1e-5));

  const SignReport below = report(cm, mu11 - 0.05, f);
  CHECK(below.side == Side::kBelow);
  CHECK(below.observed_interior == std::vector<Sign>{kPositive, kNegative});
  CHECK(below.observed_normal == std::vector<Sign>{kNegative, kPositive});
  CHECK(below.hypothesis_hf1);
  CHECK(below.match);

  const SystemDeltaEstimate delta = empirical_delta_system(cm, f, s, Side::kAbove);
  REQUIRE(delta.delta > 0.01);
  const SignReport above = report(cm, mu11 + 0.01, f);
  CHECK(above.side == Side::kAbove);
  CHECK(above.observed_interior == std::vector<Sign>{kNegative, kPositive});
  CHECK(above.match);

  // Cross-check the observed signs against the eigen-expansion oracle.
  const auto exact = oracle::modal_system_solve(s.grid(), kExample, mu11 + 0.01, {Vector::Constant(2, 1.0)});
  CHECK(interior_sign(exact[0]) == kNegative);
  CHECK(interior_sign(exact[1]) == kPositive);

  const GridFunction zero(s.grid());
  const SignReport gated = report(cm, mu11 + 0.01, pull_back(cm, {s.phi2, zero}));
  CHECK_FALSE(gated.hypothesis_hf1);
  CHECK_FALSE(gated.hf1_strict);
  CHECK_FALSE(gated.hf1_weak);
}

TEST_CASE("empirical delta examples") {
  const DomainSpectrum& s = spectrum1d();
  const CouplingMatrix cm = analyze(kExample);
  const GridFunction zero(s.grid());

  const SystemDeltaEstimate pure = empirical_delta_system(cm, pull_back(cm, {s.phi1, zero}), s, Side::kAbove);
  CHECK(pure.capped);
  CHECK(pure.delta == doctest::Approx(delta_search_cap(cm, s, 1e-3)).epsilon(1e-14));
  CHECK(pure.cap == doctest::Approx(std::min(cm.xi1() - cm.xi2(), s.lambda2 - s.lambda1) - 1e-3));

  // With f~ = (phi1 + t phi2, 0) the solution is u = X1 u~1 and u~1 solves the
  // scalar problem at sigma = xi1 + mu, so the threshold is the scalar one.
  // xi1 - xi2 ~ 9.9 keeps the search cap above the scalar thresholds.
  const CouplingMatrix wide = analyze(mat({{10, 1}, {-0.5, 0}}));
  double previous = std::numeric_limits<double>::infinity();
  for (double t : {1.0, 2.0, 4.0}) {
    GridFunction first = s.phi1;
    first.add_scaled(t, s.phi2);
    const SystemDeltaEstimate e = empirical_delta_system(wide, pull_back(wide, {first, zero}), s, Side::kAbove);
    CAPTURE(t);
    CHECK_FALSE(e.capped);
    CHECK(e.bracket_hi - e.delta <= 1e-6);
    CHECK(e.delta < previous);
    previous = e.delta;
    const double sigma = oracle::modal_amp_threshold(s.grid(), {1.0, t}, s.lambda1 + 1e-6, s.lambda2 - 1e-3, 1e-7);
    CHECK(std::abs(e.delta - (sigma - s.lambda1)) < 1e-5);
  }

  const GridFunction other = sample(s.grid(), [](double x, double) { return std::sin(7 * x) + 0.3; });
  GridFunction first = s.phi1;
  first.add_scaled(0.5, s.phi2);
  const SystemDeltaEstimate below = empirical_delta_system(cm, pull_back(cm, {first, other}), s, Side::kBelow);
  CHECK(below.delta > 0.0);

  CHECK_THROWS_AS(empirical_delta_system(cm, pull_back(cm, {s.phi2, zero}), s, Side::kAbove), HypothesisViolation);
}

TEST_CASE("property: verified pattern within the empirical delta") {
  const DomainSpectrum& s = spectrum1d();
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + trial % 3;
    std::vector<std::pair<double, int>> blocks{{2.0 + unit(rng), 1}};
    for (int k = 1; k < n; ++k) blocks.emplace_back(blocks.back().first - 0.8 - unit(rng), 1);
    const oracle::Constructed c = oracle::construct(blocks, rng);
    const CouplingMatrix cm = analyze(c.a);
    if (!cm.hypotheses().x1_nonzero_components) continue;
    const double w = 0.2 + unit(rng);
    std::vector<GridFunction> f_tilde{sample(s.grid(), [&](double x, double) { return w + x * (1 - x); })};
    for (int k = 1; k < n; ++k) {
      const double amp = unit(rng) - 0.5, freq = 1 + 4 * unit(rng);
      f_tilde.push_back(sample(s.grid(), [&](double x, double) { return amp * std::cos(freq * x); }));
    }
    const std::vector<GridFunction> f = pull_back(cm, f_tilde);
    REQUIRE(check_hf1(cm, f, s).strict);
    const double mu11 = principal_system_eigenvalue(cm, s.lambda1);
    for (Side side : {Side::kBelow, Side::kAbove}) {
      const SystemDeltaEstimate d = empirical_delta_system(cm, f, s, side);
      const double sign = side == Side::kBelow ? -1.0 : 1.0;
      for (double fraction : {0.9, 0.5, 0.1, 1e-3}) {
        const double mu = mu11 + sign * fraction * d.delta;
        const SignReport r = report(cm, mu, f);
        CAPTURE(trial);
        CAPTURE(mu);
        CHECK(r.match);
        CHECK(r.side == side);
      }
    }
  }
}

TEST_CASE("property: scaling and normalization invariance") {
  const DomainSpectrum& s = spectrum1d();
  const CouplingMatrix cm = analyze(kExample);
  const double mu11 = principal_system_eigenvalue(cm, s.lambda1);
  const GridFunction f = sample(s.grid(), [](double x, double) { return 1.0 + x; });
  const GridFunction g = sample(s.grid(), [](double x, double) { return 0.5 + x * x; });
  const CouplingMatrix flipped = cm.with_flipped_x1();
  for (double offset : {-0.2, -0.01, 0.01, 0.05}) {
    const double mu = mu11 + offset;
    const SignReport base = report(cm, mu, {f, g});
    for (double scale : {1e-3, 2.5, 1e4}) CHECK(report(cm, mu, {scale * f, scale * g}) == base);

    const SystemProblem p = make_problem(cm, mu, {f, g}, s);
    const SystemProblem q = make_problem(flipped, mu, {f, g}, s);
    const SystemSolution up = solve_jordan(p);
    const SystemSolution uq = solve_jordan(q);
    CHECK(oracle::max_abs_diff(up.u[0], uq.u[0]) <= 1e-12 * up.u[0].max_abs());
    CHECK(oracle::max_abs_diff(up.u[1], uq.u[1]) <= 1e-12 * up.u[0].max_abs());
    CHECK(oracle::max_abs_diff(up.u_tilde[0], -1.0 * uq.u_tilde[0]) <= 1e-12 * up.u_tilde[0].max_abs());
    CHECK(verify(q, uq) == base);
  }
}

TEST_CASE("annex closed forms") {
  const DomainSpectrum& s = spectrum1d();
  const TwoByTwoData a = annex_2x2(2, 1, -0.5, 0, s);
  CHECK(a.discriminant == doctest::Approx(2.0));
  CHECK(a.xi1 == doctest::Approx(1.70711).epsilon(1e-5));
  CHECK(a.xi2 == doctest::Approx(0.29289).epsilon(1e-5));
  CHECK(a.t_star == doctest::Approx(-0.58579).epsilon(1e-5));
  CHECK(a.mu_minus < a.mu_plus);
  CHECK(a.mu_minus == doctest::Approx(s.lambda1 - a.xi1).epsilon(1e-15));

  const TwoByTwoData b = annex_2x2(0, 1, -0.5, 2, s);
  CHECK(b.discriminant == doctest::Approx(2.0));
  CHECK(b.t_star == doctest::Approx(3.41421).epsilon(1e-5));

  try {
    annex_2x2(0, 1, 1, 0, s);
    FAIL("expected H1 violation");
  } catch (const HypothesisViolation& e) {
    CHECK(e.code() == "H1");
    CHECK(std::string(e.what()).find("c >= 0") != std::string::npos);
  }
  try {
    annex_2x2(0, -1, 1, 0, s);
    FAIL("expected H1 violation");
  } catch (const HypothesisViolation& e) {
    CHECK(std::string(e.what()).find("b <= 0") != std::string::npos);
    CHECK(std::string(e.what()).find("c >= 0") != std::string::npos);
  }
  CHECK_THROWS_AS(annex_2x2(1, 1, -1, 1, s), HypothesisViolation);  // D = -4
}

TEST_CASE("property: annex data agrees with the general analysis") {
  const DomainSpectrum& s = spectrum1d();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  int checked = 0;
  while (checked < 30) {
    const double a = value(rng), b = std::abs(value(rng)) + 0.1, c = -std::abs(value(rng)) - 0.1, d = value(rng);
    if ((a - d) * (a - d) + 4 * b * c <= 0.05) continue;
    const TwoByTwoData t = annex_2x2(a, b, c, d, s);
    const CouplingMatrix cm = analyze(t.matrix());
    CHECK(std::abs(t.xi1 - cm.xi1()) < 1e-12 * std::max(1.0, std::abs(t.xi1)));
    CHECK(std::abs(t.xi2 - cm.xi2()) < 1e-12 * std::max(1.0, std::abs(t.xi2)));
    CHECK((t.p * t.p_inv - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    // Same eigenvector directions up to scale.
    for (int k = 0; k < 2; ++k) {
      const double cross = t.p(0, k) * cm.p()(1, k) - t.p(1, k) * cm.p()(0, k);
      CHECK(std::abs(cross) < 1e-10 * t.p.col(k).norm() * cm.p().col(k).norm());
    }
    ++checked;
  }
}

TEST_CASE("annex theorem checks") {
  const DomainSpectrum& s = spectrum1d();
  const TwoByTwoData mixed = annex_2x2(2, 1, -0.5, 0, s);
  const AnnexVerdict v1 = annex_theorem_check(mixed, AnnexTheorem::kMixedAbove, s.phi1, s.phi1, mixed.mu_minus + 0.01, s);
  CHECK(v1.observed_interior == std::array<Sign, 2>{kNegative, kPositive});
  CHECK(v1.observed_normal == std::array<Sign, 2>{kPositive, kNegative});
  CHECK(v1.conclusion_holds);
  CHECK(v1.agrees_with_prediction);

  const TwoByTwoData upper = annex_2x2(0, 1, -0.5, 2, s);
  const AnnexVerdict v2 =
      annex_theorem_check(upper, AnnexTheorem::kNegativeAbove, -0.1 * s.phi1, s.phi1, upper.mu_minus + 0.01, s);
  CHECK(v2.observed_interior == std::array<Sign, 2>{kNegative, kNegative});
  CHECK(v2.conclusion_holds);
  CHECK(v2.agrees_with_prediction);

  for (double offset : {1e-3, 0.01, 0.1, 1.0, 5.0, 20.0}) {
    const AnnexVerdict v3 =
        annex_theorem_check(upper, AnnexTheorem::kPositiveBelow, s.phi1, s.phi1, upper.mu_minus - offset, s);
    CAPTURE(offset);
    CHECK(v3.observed_interior == std::array<Sign, 2>{kPositive, kPositive});
    CHECK(v3.observed_normal == std::array<Sign, 2>{kNegative, kNegative});
    CHECK(v3.conclusion_holds);
    CHECK(v3.agrees_with_prediction);
  }
}

TEST_CASE("annex theorem preconditions name the failing clause") {
  const DomainSpectrum& s = spectrum1d();
  const TwoByTwoData mixed = annex_2x2(2, 1, -0.5, 0, s);
  const TwoByTwoData upper = annex_2x2(0, 1, -0.5, 2, s);
  auto clause = [&](const TwoByTwoData& d, AnnexTheorem t, const GridFunction& f, const GridFunction& g, double mu) {
    try {
      annex_theorem_check(d, t, f, g, mu, s);
    } catch (const HypothesisNotMet& e) {
      return e.code();
    }
    return std::string();
  };
  const GridFunction zero(s.grid());
  CHECK(clause(upper, AnnexTheorem::kMixedAbove, s.phi1, s.phi1, upper.mu_minus + 0.01) == "d_less_than_a");
  CHECK(clause(mixed, AnnexTheorem::kNegativeAbove, s.phi1, s.phi1, mixed.mu_minus + 0.01) == "a_less_than_d");
  CHECK(clause(mixed, AnnexTheorem::kMixedAbove, s.phi1, s.phi1, mixed.mu_minus - 0.01) == "mu_range");
  CHECK(clause(mixed, AnnexTheorem::kMixedAbove, s.phi2, s.phi1, mixed.mu_minus + 0.01) == "data_sign");
  CHECK(clause(upper, AnnexTheorem::kPositiveBelow, 5.0 * s.phi1, s.phi1, upper.mu_minus - 0.1) == "t_star_condition");
  CHECK(clause(upper, AnnexTheorem::kPositiveBelow, zero, zero, upper.mu_minus - 0.1) == "nontrivial_data");
}
