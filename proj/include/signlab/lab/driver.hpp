#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signlab/error.hpp"
#include "signlab/lab/config.hpp"
#include "signlab/lab/io.hpp"
#include "signlab/scalar_solver.hpp"

namespace signlab::lab {

enum class Verb { kSolve, kSweep, kAmp, kAnnex, kCheckHypotheses };

std::optional<Verb> parse_verb(std::string_view name);
std::string to_string(Verb verb);

/// 0 success, 2 hypothesis, 3 numerical, 4 config.
int exit_code(ErrorCategory category);

struct Invocation {
  Verb verb = Verb::kSolve;
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  ///< overrides the config's output key
  std::optional<double> tol;                 ///< overrides the config's tol key
  std::optional<std::uint64_t> seed;         ///< recorded only
};

/// Loads the config and runs the verb. On failure writes error.json to the
/// output directory (when it can be created) and one line to `err`, and
/// returns the category's exit code.
int execute(const Invocation& invocation, std::ostream& log, std::ostream& err);

/// Everything derived from a config before any verb-specific work.
struct Study {
  ExperimentConfig config;
  CouplingMatrix cm;
  DomainSpectrum spectrum;
  std::vector<GridFunction> f;
  double mu11 = 0.0;
};

Study prepare(const ExperimentConfig& config);

/// The mu values of the sweep spec, ascending. The automatic window is
/// mu11 +- halfwidth with `count` equally spaced points.
std::vector<double> sweep_points(const Study& study);

/// One row per mu, computed on a worker pool and returned in ascending mu.
std::vector<SweepRow> sweep_rows(const Study& study, const std::vector<double>& mus, unsigned workers = 0);

struct SweepSide {
  Side side = Side::kBelow;
  std::string status = "ok";  ///< or the error code that stopped the search
  SystemDeltaEstimate delta;
  int rows_inside = 0;        ///< rows with 0 < |mu - mu11| <= delta on this side
  int mismatches_inside = 0;
};

std::vector<SweepSide> sweep_summary(const Study& study, const std::vector<SweepRow>& rows);
std::string sweep_summary_csv(const std::vector<SweepSide>& sides);

/// AmpEstimate for h = source.1 and for h1 phi1 + s h_perp over amp.scales.
struct AmpStudy {
  AmpEstimate base;
  std::vector<std::pair<double, AmpEstimate>> scaled;  ///< ascending scale
  bool monotone = false;  ///< delta non-increasing in the scale, strictly where not capped
};

AmpStudy amp_study(const Study& study);
std::string amp_csv(const AmpStudy& amp);

// Verb entry points; each writes into `out` and throws signlab::Error.
void run_solve(const Study& study, const std::filesystem::path& out, const Invocation& invocation);
void run_sweep(const Study& study, const std::filesystem::path& out, const Invocation& invocation);
void run_amp_estimate(const Study& study, const std::filesystem::path& out, const Invocation& invocation);
void run_annex(const Study& study, const std::filesystem::path& out, const Invocation& invocation);
/// Works from the raw config because a failing matrix cannot be analyzed.
void run_check_hypotheses(const ExperimentConfig& config, const std::filesystem::path& out,
                          const Invocation& invocation, std::ostream& log);

}  // namespace signlab::lab
