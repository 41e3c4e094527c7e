#include "signlab/lab/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "signlab/system_solver.hpp"

namespace signlab::lab {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<Verb> parse_verb(std::string_view name) {
  if (name == "solve") return Verb::kSolve;
  if (name == "sweep") return Verb::kSweep;
  if (name == "amp") return Verb::kAmp;
  if (name == "annex") return Verb::kAnnex;
  if (name == "check-hypotheses") return Verb::kCheckHypotheses;
  return std::nullopt;
}

std::string to_string(Verb verb) {
  switch (verb) {
    case Verb::kSolve:
      return "solve";
    case Verb::kSweep:
      return "sweep";
    case Verb::kAmp:
      return "amp";
    case Verb::kAnnex:
      return "annex";
    case Verb::kCheckHypotheses:
      return "check-hypotheses";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kHypothesis:
      return 2;
    case ErrorCategory::kNumerical:
      return 3;
    case ErrorCategory::kConfig:
      return 4;
  }
  return 3;
}

namespace {

std::string category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kHypothesis:
      return "hypothesis";
    case ErrorCategory::kNumerical:
      return "numerical";
    case ErrorCategory::kConfig:
      return "config";
  }
  return "unknown";
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json signs_json(const std::vector<Sign>& signs) {
  json out = json::array();
  for (Sign s : signs) out.push_back(to_string(s));
  return out;
}

json report_json(const HypothesisReport& r) {
  return {{"real_spectrum", r.real_spectrum},
          {"xi1_positive", r.xi1_positive},
          {"xi1_alg_simple", r.xi1_alg_simple},
          {"xi1_geom_simple", r.xi1_geom_simple},
          {"x1_nonzero_components", r.x1_nonzero_components},
          {"verdict", r.verdict()},
          {"violations", r.violations()}};
}

json grid_json(const DomainGrid& g) {
  json extents = json::array(), resolution = json::array(), spacing = json::array();
  for (int a = 0; a < g.dimension; ++a) {
    extents.push_back(g.extents[a]);
    resolution.push_back(g.resolution[a]);
    spacing.push_back(g.spacing[a]);
  }
  return {{"dimension", g.dimension}, {"extents", extents}, {"resolution", resolution}, {"spacing", spacing}};
}

json sign_report_json(const SignReport& r) {
  return {{"mu", r.mu},
          {"side", to_string(r.side)},
          {"predicted", signs_json(r.predicted)},
          {"observed_interior", signs_json(r.observed_interior)},
          {"observed_normal", signs_json(r.observed_normal)},
          {"hypothesis_hf1", r.hypothesis_hf1},
          {"hf1_strict", r.hf1_strict},
          {"hf1_weak", r.hf1_weak},
          {"match", r.match},
          {"deadband", r.deadband}};
}

json two_by_two_json(const TwoByTwoData& t) {
  return {{"a", t.a},           {"b", t.b},          {"c", t.c},
          {"d", t.d},           {"D", t.discriminant}, {"xi1", t.xi1},
          {"xi2", t.xi2},       {"mu_minus", t.mu_minus}, {"mu_plus", t.mu_plus},
          {"t_star", t.t_star}, {"p", matrix_json(t.p)},  {"p_inv", matrix_json(t.p_inv)}};
}

json amp_json(const AmpEstimate& e) {
  return {{"mu_threshold", e.mu_threshold},     {"bracket_lo", e.bracket_lo},
          {"bracket_hi", e.bracket_hi},         {"delta_empirical", e.delta_empirical},
          {"delta_formula_ratio", e.delta_formula_ratio}, {"h1", e.h1},
          {"q_norm_perp", e.q_norm_perp},       {"capped", e.capped}};
}

// Manifest fields shared by every verb.
json manifest(const Study& study, const Invocation& invocation, const std::string& started) {
  const CouplingMatrix& cm = study.cm;
  const DomainSpectrum& s = study.spectrum;
  json m;
  m["tool"] = "signlab";
  m["verb"] = to_string(invocation.verb);
  m["config_hash"] = "fnv1a64:" + fnv1a_hex(study.config.text);
  m["seed"] = invocation.seed ? json(*invocation.seed) : json(nullptr);
  m["grid"] = grid_json(s.grid());
  m["spectrum"] = {{"lambda1", s.lambda1},
                   {"lambda2", s.lambda2},
                   {"residual1", s.residual1},
                   {"residual2", s.residual2},
                   {"iterations", s.iterations}};
  json blocks = json::array();
  for (int b : cm.block_sizes()) blocks.push_back(b);
  m["matrix"] = {{"entries", matrix_json(cm.entries())},
                 {"eigenvalues", vector_json(cm.eigenvalues())},
                 {"block_sizes", blocks},
                 {"x1", vector_json(cm.x1())},
                 {"p", matrix_json(cm.p())},
                 {"p_inv", matrix_json(cm.p_inv())},
                 {"reconstruction_error", cm.reconstruction_error()},
                 {"tolerance", cm.tolerance()},
                 {"hypotheses", report_json(cm.hypotheses())}};
  m["mu11"] = study.mu11;
  m["source_basis"] = study.config.basis == SourceBasis::kTilde ? "tilde" : "physical";
  m["sources"] = study.config.sources;
  m["started_at"] = started;
  return m;
}

void finish(json& m, const fs::path& out, const std::vector<std::string>& files) {
  m["files"] = files;
  m["finished_at"] = utc_timestamp();
  write_text(out / "manifest.json", m.dump(2) + "\n");
}

double require_mu(const Study& study) {
  if (!study.config.mu) throw ConfigError("missing_key", "this verb needs the key 'mu'");
  return *study.config.mu;
}

// The 2x2 closed forms apply only under b > 0, c < 0, D > 0.
std::optional<TwoByTwoData> maybe_two_by_two(const Study& study) {
  if (study.cm.size() != 2) return std::nullopt;
  const Matrix& a = study.cm.entries();
  try {
    return annex_2x2(a(0, 0), a(0, 1), a(1, 0), a(1, 1), study.spectrum);
  } catch (const HypothesisViolation&) {
    return std::nullopt;
  }
}

}  // namespace

Study prepare(const ExperimentConfig& config) {
  Study s;
  s.config = config;
  s.cm = analyze(config.matrix, config.tol);
  s.spectrum = leading_eigenpairs(make_grid(config));
  s.f = build_sources(config, s.cm, s.spectrum);
  s.mu11 = principal_system_eigenvalue(s.cm, s.spectrum.lambda1);
  return s;
}

std::vector<double> sweep_points(const Study& study) {
  const SweepSpec& spec = study.config.sweep;
  double lo = spec.min, hi = spec.max;
  if (spec.automatic) {
    double half = study.spectrum.lambda2 - study.spectrum.lambda1;
    if (study.cm.size() > 1) half = std::min(half, study.cm.xi1() - study.cm.xi2());
    half = spec.halfwidth.value_or(0.5 * half);
    lo = study.mu11 - half;
    hi = study.mu11 + half;
  }
  std::vector<double> mus;
  if (spec.count == 1) return {0.5 * (lo + hi)};
  for (int k = 0; k < spec.count; ++k) mus.push_back(lo + (hi - lo) * k / (spec.count - 1));
  std::sort(mus.begin(), mus.end());
  return mus;
}

std::vector<SweepRow> sweep_rows(const Study& study, const std::vector<double>& mus, unsigned workers) {
  std::vector<SweepRow> rows(mus.size());
  auto evaluate = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.mu = mus[i];
    if (std::abs(row.mu - study.mu11) < kAtEigenvalueBand) {
      row.status = "at_eigenvalue";
      return;
    }
    try {
      const SystemProblem p = make_problem(study.cm, row.mu, study.f, study.spectrum);
      const SystemSolution u = solve_jordan(p);
      row.report = verify(p, u);
      row.residual = u.residual;
      row.u1_tilde_max = u.u_tilde.front().max_abs();
    } catch (const NearSingularShift&) {
      row.status = "near_singular_shift";
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, mus.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < mus.size() && !failed; i = next++) {
      try {
        evaluate(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.mu < b.mu; });
  return rows;
}

std::vector<SweepSide> sweep_summary(const Study& study, const std::vector<SweepRow>& rows) {
  std::vector<SweepSide> out;
  for (Side side : {Side::kBelow, Side::kAbove}) {
    SweepSide s;
    s.side = side;
    try {
      s.delta = empirical_delta_system(study.cm, study.f, study.spectrum, side);
    } catch (const Error& e) {
      s.status = e.code();
      out.push_back(s);
      continue;
    }
    for (const SweepRow& row : rows) {
      if (row.status != "ok" || row.report.side != side) continue;
      const double offset = std::abs(row.mu - study.mu11);
      if (offset > s.delta.delta) continue;
      ++s.rows_inside;
      if (!row.report.match) ++s.mismatches_inside;
    }
    out.push_back(s);
  }
  return out;
}

std::string sweep_summary_csv(const std::vector<SweepSide>& sides) {
  std::string out = "side,status,delta,bracket_hi,cap,capped,rows_inside,mismatches_inside\n";
  for (const SweepSide& s : sides) {
    out += to_string(s.side) + "," + s.status;
    if (s.status != "ok") {
      out += ",,,,,,\n";
      continue;
    }
    out += "," + format_double(s.delta.delta) + "," + format_double(s.delta.bracket_hi) + "," +
           format_double(s.delta.cap) + "," + (s.delta.capped ? "true" : "false") + "," +
           std::to_string(s.rows_inside) + "," + std::to_string(s.mismatches_inside) + "\n";
  }
  return out;
}

AmpStudy amp_study(const Study& study) {
  if (study.cm.size() != 1 && !study.config.amp_scalar) {
    throw ConfigError("amp_needs_scalar", "the amp verb needs n = 1 or amp.scalar = true");
  }
  const GridFunction& h = study.f.front();
  AmpSearch search;
  search.q = study.config.norm_exponent();
  AmpStudy out;
  out.base = estimate_amp_interval(h, study.spectrum, search);

  const GroundstateSplit parts = split(h, study.spectrum, search.q);
  std::vector<double> scales = study.config.amp_scales;
  std::sort(scales.begin(), scales.end());
  for (double s : scales) {
    GridFunction hs = parts.h1 * study.spectrum.phi1;
    hs.add_scaled(s, parts.h_perp);
    out.scaled.emplace_back(s, estimate_amp_interval(hs, study.spectrum, search));
  }
  out.monotone = true;
  for (std::size_t k = 1; k < out.scaled.size(); ++k) {
    const AmpEstimate& prev = out.scaled[k - 1].second;
    const AmpEstimate& cur = out.scaled[k].second;
    const bool both_capped = prev.capped && cur.capped;
    if (both_capped ? cur.delta_empirical > prev.delta_empirical : !(cur.delta_empirical < prev.delta_empirical)) {
      out.monotone = false;
    }
  }
  return out;
}

std::string amp_csv(const AmpStudy& amp) {
  std::string out =
      "scale,h1,q_norm_perp,mu_threshold,bracket_lo,bracket_hi,delta_empirical,delta_formula_ratio,capped\n";
  for (const auto& [scale, e] : amp.scaled) {
    out += format_double(scale) + "," + format_double(e.h1) + "," + format_double(e.q_norm_perp) + "," +
           format_double(e.mu_threshold) + "," + format_double(e.bracket_lo) + "," + format_double(e.bracket_hi) +
           "," + format_double(e.delta_empirical) + "," + format_double(e.delta_formula_ratio) + "," +
           (e.capped ? "true" : "false") + "\n";
  }
  return out;
}

void run_solve(const Study& study, const fs::path& out, const Invocation& invocation) {
  const std::string started = utc_timestamp();
  const double mu = require_mu(study);
  const SystemProblem p = make_problem(study.cm, mu, study.f, study.spectrum);
  const SystemSolution jordan = solve_jordan(p);
  const SystemSolution direct = solve_direct(p);

  std::vector<std::string> files;
  double scale = 0.0, gap = 0.0;
  for (int i = 0; i < study.cm.size(); ++i) {
    const std::string u_name = "u_" + std::to_string(i + 1) + ".csv";
    const std::string t_name = "u_tilde_" + std::to_string(i + 1) + ".csv";
    write_grid_function(out / u_name, jordan.u[i]);
    write_grid_function(out / t_name, jordan.u_tilde[i]);
    files.push_back(u_name);
    files.push_back(t_name);
    scale = std::max(scale, direct.u[i].max_abs());
    for (std::size_t k = 0; k < jordan.u[i].size(); ++k) gap = std::max(gap, std::abs(jordan.u[i][k] - direct.u[i][k]));
  }

  json m = manifest(study, invocation, started);
  m["solution"] = {{"mu", mu},
                   {"method", jordan.method},
                   {"residual", jordan.residual},
                   {"backward_error", jordan.backward_error},
                   {"direct_residual", direct.residual},
                   {"direct_backward_error", direct.backward_error},
                   {"cross_method_discrepancy", scale > 0.0 ? gap / scale : 0.0}};
  try {
    m["sign_report"] = sign_report_json(verify(p, jordan));
  } catch (const AtEigenvalue& e) {
    m["sign_report"] = {{"status", e.code()}};
  }
  if (const auto t = maybe_two_by_two(study)) {
    write_text(out / "annex.json", json{{"two_by_two", two_by_two_json(*t)}}.dump(2) + "\n");
    files.push_back("annex.json");
    m["two_by_two"] = two_by_two_json(*t);
  }
  finish(m, out, files);
}

void run_sweep(const Study& study, const fs::path& out, const Invocation& invocation) {
  const std::string started = utc_timestamp();
  const std::vector<SweepRow> rows = sweep_rows(study, sweep_points(study));
  const std::vector<SweepSide> sides = sweep_summary(study, rows);
  write_text(out / "sweep.csv", sweep_csv(rows, study.cm.size()));
  write_text(out / "sweep_summary.csv", sweep_summary_csv(sides));

  json m = manifest(study, invocation, started);
  json summary = json::array();
  for (const SweepSide& s : sides) {
    json entry = {{"side", to_string(s.side)}, {"status", s.status}};
    if (s.status == "ok") {
      entry["delta"] = s.delta.delta;
      entry["bracket_hi"] = s.delta.bracket_hi;
      entry["cap"] = s.delta.cap;
      entry["capped"] = s.delta.capped;
      entry["rows_inside"] = s.rows_inside;
      entry["mismatches_inside"] = s.mismatches_inside;
    }
    summary.push_back(std::move(entry));
  }
  m["sweep"] = {{"points", rows.size()}, {"summary", summary}};
  finish(m, out, {"sweep.csv", "sweep_summary.csv"});
}

void run_amp_estimate(const Study& study, const fs::path& out, const Invocation& invocation) {
  const std::string started = utc_timestamp();
  const AmpStudy amp = amp_study(study);
  write_text(out / "amp.csv", amp_csv(amp));
  json m = manifest(study, invocation, started);
  m["amp"] = amp_json(amp.base);
  m["amp"]["q"] = study.config.norm_exponent();
  m["amp"]["monotone_in_scale"] = amp.monotone;
  finish(m, out, {"amp.csv"});
}

void run_annex(const Study& study, const fs::path& out, const Invocation& invocation) {
  const std::string started = utc_timestamp();
  if (study.cm.size() != 2) throw ConfigError("annex_needs_2x2", "the annex verb needs a 2 x 2 matrix");
  const Matrix& a = study.cm.entries();
  const TwoByTwoData data = annex_2x2(a(0, 0), a(0, 1), a(1, 0), a(1, 1), study.spectrum);
  const double mu = require_mu(study);
  const std::string which = study.config.annex_theorem.value_or("all");

  auto verdict_json = [&](const AnnexVerdict& v) {
    auto arr = [](const std::array<Sign, 2>& s) { return json::array({to_string(s[0]), to_string(s[1])}); };
    return json{{"mu", v.mu},
                {"expected_interior", arr(v.expected_interior)},
                {"expected_normal", arr(v.expected_normal)},
                {"observed_interior", arr(v.observed_interior)},
                {"observed_normal", arr(v.observed_normal)},
                {"general_prediction", signs_json(v.general_prediction)},
                {"conclusion_holds", v.conclusion_holds},
                {"agrees_with_prediction", v.agrees_with_prediction}};
  };

  json verdicts = json::array();
  for (AnnexTheorem t : {AnnexTheorem::kMixedAbove, AnnexTheorem::kNegativeAbove, AnnexTheorem::kPositiveBelow}) {
    if (which != "all" && which != to_string(t)) continue;
    json entry = {{"theorem", to_string(t)}};
    try {
      const AnnexVerdict v = annex_theorem_check(data, t, study.f[0], study.f[1], mu, study.spectrum);
      entry["status"] = "checked";
      entry["verdict"] = verdict_json(v);
      if (t == AnnexTheorem::kPositiveBelow) {
        // No nearness restriction below mu-: sample a range of offsets.
        json samples = json::array();
        for (double offset : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
          samples.push_back(verdict_json(
              annex_theorem_check(data, t, study.f[0], study.f[1], data.mu_minus - offset, study.spectrum)));
        }
        entry["samples"] = samples;
      }
    } catch (const HypothesisNotMet& e) {
      if (which != "all") throw;
      entry["status"] = "not_applicable";
      entry["clause"] = e.code();
      entry["message"] = e.what();
    }
    verdicts.push_back(std::move(entry));
  }

  write_text(out / "annex.json", json{{"two_by_two", two_by_two_json(data)}, {"verdicts", verdicts}}.dump(2) + "\n");
  json m = manifest(study, invocation, started);
  m["two_by_two"] = two_by_two_json(data);
  finish(m, out, {"annex.json"});
}

void run_check_hypotheses(const ExperimentConfig& config, const fs::path& out, const Invocation& invocation,
                          std::ostream& log) {
  const std::string started = utc_timestamp();
  const HypothesisReport report = check_hypotheses(config.matrix, config.tol);
  json record = {{"tool", "signlab"},
                 {"verb", to_string(invocation.verb)},
                 {"config_hash", "fnv1a64:" + fnv1a_hex(config.text)},
                 {"matrix", matrix_json(config.matrix)},
                 {"tolerance", config.tol},
                 {"hypotheses", report_json(report)},
                 {"started_at", started},
                 {"finished_at", utc_timestamp()}};
  write_text(out / "hypotheses.json", record.dump(2) + "\n");
  log << report_json(report).dump() << "\n";
  if (!report.verdict()) {
    const std::string code = report.violations().front();
    throw HypothesisViolation(code, "hypothesis check failed: " + code);
  }
}

int execute(const Invocation& invocation, std::ostream& log, std::ostream& err) {
  std::optional<fs::path> out = invocation.out;
  auto record_error = [&](const std::string& category, const std::string& code, const std::string& message,
                          int status) {
    const json record = {{"status", "error"},     {"verb", to_string(invocation.verb)},
                         {"category", category},  {"code", code},
                         {"message", message},    {"exit_code", status}};
    err << "signlab: " << category << " error [" << code << "]: " << message << "\n";
    if (!out) return status;
    try {
      fs::create_directories(*out);
      write_text(*out / "error.json", record.dump(2) + "\n");
    } catch (const std::exception&) {
      err << "signlab: could not write error.json to " << out->string() << "\n";
    }
    return status;
  };

  try {
    ExperimentConfig config = load_config(invocation.config);
    if (invocation.tol) {
      if (!(*invocation.tol > 0.0)) throw ConfigError("bad_value", "--tol must be positive");
      config.tol = *invocation.tol;
    }
    if (!out) out = fs::path(config.output);
    fs::create_directories(*out);
    fs::remove(*out / "error.json");

    if (invocation.verb == Verb::kCheckHypotheses) {
      run_check_hypotheses(config, *out, invocation, log);
      return 0;
    }
    const Study study = prepare(config);
    switch (invocation.verb) {
      case Verb::kSolve:
        run_solve(study, *out, invocation);
        break;
      case Verb::kSweep:
        run_sweep(study, *out, invocation);
        break;
      case Verb::kAmp:
        run_amp_estimate(study, *out, invocation);
        break;
      case Verb::kAnnex:
        run_annex(study, *out, invocation);
        break;
      case Verb::kCheckHypotheses:
        break;
    }
    log << "signlab " << to_string(invocation.verb) << ": wrote " << out->string() << "\n";
    return 0;
  } catch (const Error& e) {
    return record_error(category_name(e.category()), e.code(), e.what(), exit_code(e.category()));
  } catch (const fs::filesystem_error& e) {
    return record_error("config", "filesystem", e.what(), exit_code(ErrorCategory::kConfig));
  } catch (const std::exception& e) {
    return record_error("numerical", "internal", e.what(), exit_code(ErrorCategory::kNumerical));
  }
}

}  // namespace signlab::lab
