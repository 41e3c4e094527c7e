#include "signlab/sign.hpp"

#include "signlab/error.hpp"

namespace signlab {

Sign negate(Sign s) {
  switch (s) {
    case Sign::kNegative:
      return Sign::kPositive;
    case Sign::kPositive:
      return Sign::kNegative;
    default:
      return s;
  }
}

Sign sign_of(double value, double threshold) {
  if (value > threshold) return Sign::kPositive;
  if (value < -threshold) return Sign::kNegative;
  return Sign::kZero;
}

Sign uniform_sign(std::span<const double> values, double threshold) {
  bool pos = false;
  bool neg = false;
  bool zero = false;
  for (double v : values) {
    switch (sign_of(v, threshold)) {
      case Sign::kPositive:
        pos = true;
        break;
      case Sign::kNegative:
        neg = true;
        break;
      default:
        zero = true;
    }
  }
  if (pos && !neg && !zero) return Sign::kPositive;
  if (neg && !pos && !zero) return Sign::kNegative;
  if (!pos && !neg) return Sign::kZero;
  return Sign::kMixed;
}

std::string to_string(Sign s) {
  switch (s) {
    case Sign::kNegative:
      return "-";
    case Sign::kZero:
      return "0";
    case Sign::kPositive:
      return "+";
    case Sign::kMixed:
      return "mixed";
  }
  return "mixed";
}

Sign parse_sign(const std::string& text) {
  if (text == "+") return Sign::kPositive;
  if (text == "-") return Sign::kNegative;
  if (text == "0") return Sign::kZero;
  if (text == "mixed") return Sign::kMixed;
  throw ConfigError("invalid_sign", "unknown sign token '" + text + "'");
}

}  // namespace signlab
