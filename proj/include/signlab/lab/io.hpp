#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signlab/domain_laplacian.hpp"
#include "signlab/sign_analysis.hpp"

namespace signlab::lab {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Current UTC time as ISO 8601 with a trailing 'Z'.
std::string utc_timestamp();

/// Component file: a "# dimension=.. extents=.. resolution=.." line, a
/// header "x,value" (1D) or "x,y,value" (2D), then one row per interior
/// node in storage order (x fastest).
void write_grid_function(const std::filesystem::path& path, const GridFunction& g);
std::string grid_function_csv(const GridFunction& g);
/// Inverse of grid_function_csv; values are reproduced exactly. Throws
/// ConfigError "bad_csv".
GridFunction read_grid_function(const std::filesystem::path& path);
GridFunction parse_grid_function_csv(std::string_view text);

/// One sweep row. `status` is "ok", "at_eigenvalue" or "near_singular_shift";
/// only "ok" rows carry signs and numbers.
struct SweepRow {
  double mu = 0.0;
  std::string status = "ok";
  SignReport report;
  double residual = 0.0;
  double u1_tilde_max = 0.0;
};

/// Columns: mu, side, pred_1..n, obs_1..n, normal_1..n, match, hf1_strict,
/// hf1_weak, residual, u1_tilde_max.
std::string sweep_csv(const std::vector<SweepRow>& rows, int components);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace signlab::lab
