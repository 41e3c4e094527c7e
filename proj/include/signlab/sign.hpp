#pragma once

#include <span>
#include <string>

namespace signlab {

/// Relative dead-band for sign decisions: |value| below
/// kSignDeadband * reference counts as zero.
inline constexpr double kSignDeadband = 1e-9;

enum class Sign { kNegative, kZero, kPositive, kMixed };

Sign negate(Sign s);
Sign sign_of(double value, double threshold);

/// Uniform sign of a set of values: kPositive when every value exceeds
/// `threshold`, kNegative when every value is below -threshold, kZero when
/// every value is within the band, and kMixed otherwise.
Sign uniform_sign(std::span<const double> values, double threshold);

/// "+", "-", "0" or "mixed".
std::string to_string(Sign s);
Sign parse_sign(const std::string& text);

}  // namespace signlab
