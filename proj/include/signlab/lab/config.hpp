#pragma once

// Experiment configuration: a flat, versioned key = value text format.
//
//   version = 1
//   dimension = 1
//   extents = 1.0
//   resolution = 199
//   matrix.row.1 = 2 1
//   matrix.row.2 = -0.5 0
//   source.1 = mode(1)
//   source.2 = max0(poly(0.2, -1)) + 0.5 * mode(1)
//   mu = 8.1
//   sweep.count = 41
//
// '#' starts a comment. Lists are separated by spaces or commas. Sources are
// expressions over a fixed vocabulary (see SourceExpression), never code.

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signlab/coupling_matrix.hpp"
#include "signlab/domain_laplacian.hpp"

namespace signlab::lab {

inline constexpr int kConfigVersion = 1;

/// How source.i is interpreted: physical F, or transformed F~ with F = P F~.
enum class SourceBasis { kPhysical, kTilde };

struct SweepSpec {
  bool automatic = true;  ///< window mu11 +- halfwidth
  int count = 41;
  double min = 0.0;
  double max = 0.0;
  /// Defaults to min{xi1 - xi2, lambda2 - lambda1} / 2.
  std::optional<double> halfwidth;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  int dimension = 1;
  std::array<double, 2> extents{1.0, 1.0};
  std::array<int, 2> resolution{0, 0};
  Matrix matrix;
  std::vector<std::string> sources;
  SourceBasis basis = SourceBasis::kPhysical;
  std::optional<double> mu;
  SweepSpec sweep;
  std::optional<double> q;
  double tol = kDefaultMatrixTol;
  std::string output = "out";
  std::vector<double> amp_scales{0.5, 1.0, 2.0, 4.0};
  bool amp_scalar = false;  ///< allow the amp verb with n > 1 (uses source.1)
  std::optional<std::string> annex_theorem;
  std::string text;  ///< raw input, hashed into the manifest

  int components() const { return static_cast<int>(matrix.rows()); }
  double norm_exponent() const;
};

/// Throws ConfigError with codes such as "missing_key", "unknown_key",
/// "duplicate_key", "bad_value", "matrix_not_square", "source_count",
/// "unsupported_version", "invalid_source".
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

DomainGrid make_grid(const ExperimentConfig& config);

/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | primary
///   primary := number | call | '(' expr ')'
///   call    := mode(k)            k in {1, 2}: the computed phi_k
///            | sine(kx [, ky])     sin(kx pi x / Lx) [* sin(ky pi y / Ly)]
///            | const(c)
///            | poly(c0, c1, ...)   c0 + c1 x + c2 x^2 + ...
///            | polyy(c0, c1, ...)  same in y
///            | max0(expr)          pointwise max(expr, 0)
/// Arithmetic is nodewise.
class SourceExpression {
 public:
  /// Throws ConfigError "invalid_source".
  static SourceExpression parse(std::string_view text);

  GridFunction evaluate(const DomainSpectrum& spectrum) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

/// Evaluates every source; with SourceBasis::kTilde the result is P F~.
std::vector<GridFunction> build_sources(const ExperimentConfig& config, const CouplingMatrix& cm,
                                        const DomainSpectrum& spectrum);

}  // namespace signlab::lab
