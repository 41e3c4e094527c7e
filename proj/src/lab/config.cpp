#include "signlab/lab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "signlab/error.hpp"
#include "signlab/scalar_solver.hpp"
#include "signlab/system_solver.hpp"

namespace signlab::lab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(const std::string& key, std::string_view value, const std::string& expected) {
  throw ConfigError("bad_value", key + " = '" + std::string(value) + "': expected " + expected);
}

double parse_double(const std::string& key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) bad_value(key, text, "a real number");
  return v;
}

int parse_int(const std::string& key, std::string_view text) {
  text = trim(text);
  int v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) bad_value(key, text, "an integer");
  return v;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == ',')) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != ',') ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& key, std::string_view text) {
  std::vector<double> out;
  for (std::string_view item : split_list(text)) out.push_back(parse_double(key, item));
  return out;
}

bool parse_bool(const std::string& key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  bad_value(key, text, "true or false");
}

// Index suffix of "prefix.N", or 0 when the key has another shape.
int indexed_key(const std::string& key, std::string_view prefix) {
  if (key.size() <= prefix.size() || key.compare(0, prefix.size(), prefix) != 0) return 0;
  int index = 0;
  const char* begin = key.data() + prefix.size();
  const char* end = key.data() + key.size();
  const auto [ptr, ec] = std::from_chars(begin, end, index);
  if (ec != std::errc() || ptr != end || index < 1) return 0;
  return index;
}

}  // namespace

double ExperimentConfig::norm_exponent() const { return q.value_or(default_q(dimension)); }

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> entries;
  std::map<std::string, int> lines;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("bad_line", "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (key.empty()) throw ConfigError("bad_line", "line " + std::to_string(line_no) + ": empty key");
    if (!entries.emplace(key, value).second) {
      throw ConfigError("duplicate_key", "line " + std::to_string(line_no) + ": '" + key + "' given twice");
    }
    lines[key] = line_no;
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    std::string v = it->second;
    entries.erase(it);
    return v;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigError("missing_key", "required key '" + key + "' is missing");
    return *v;
  };

  ExperimentConfig c;
  c.text = std::string(text);
  c.version = parse_int("version", require("version"));
  if (c.version != kConfigVersion) {
    throw ConfigError("unsupported_version", "config version " + std::to_string(c.version) + " is not supported");
  }
  c.dimension = parse_int("dimension", require("dimension"));
  if (c.dimension != 1 && c.dimension != 2) bad_value("dimension", std::to_string(c.dimension), "1 or 2");

  const std::string resolution = require("resolution");
  const auto res_items = split_list(resolution);
  if (static_cast<int>(res_items.size()) != c.dimension) bad_value("resolution", resolution, "one integer per axis");
  for (int a = 0; a < c.dimension; ++a) c.resolution[a] = parse_int("resolution", res_items[a]);
  if (auto v = take("extents")) {
    const std::vector<double> e = parse_doubles("extents", *v);
    if (static_cast<int>(e.size()) != c.dimension) bad_value("extents", *v, "one length per axis");
    for (int a = 0; a < c.dimension; ++a) c.extents[a] = e[a];
  }

  // matrix.row.i and source.i, numbered from 1 without gaps.
  std::map<int, std::string> rows, sources;
  for (auto it = entries.begin(); it != entries.end();) {
    if (const int r = indexed_key(it->first, "matrix.row."); r > 0) {
      rows[r] = it->second;
      it = entries.erase(it);
    } else if (const int s = indexed_key(it->first, "source."); s > 0) {
      sources[s] = it->second;
      it = entries.erase(it);
    } else {
      ++it;
    }
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw ConfigError("missing_key", "no matrix.row.1 given");
  if (rows.rbegin()->first != n) throw ConfigError("matrix_not_square", "matrix rows must be numbered 1.." + std::to_string(n));
  c.matrix.resize(n, n);
  for (const auto& [r, text_row] : rows) {
    const std::vector<double> row = parse_doubles("matrix.row." + std::to_string(r), text_row);
    if (static_cast<int>(row.size()) != n) {
      throw ConfigError("matrix_not_square", "matrix.row." + std::to_string(r) + " has " + std::to_string(row.size()) +
                                                 " entries, expected " + std::to_string(n));
    }
    for (int j = 0; j < n; ++j) c.matrix(r - 1, j) = row[j];
  }
  if (static_cast<int>(sources.size()) != n || (n > 0 && sources.rbegin()->first != n)) {
    throw ConfigError("source_count", "expected source.1..source." + std::to_string(n));
  }
  for (const auto& [i, expr] : sources) {
    SourceExpression::parse(expr);
    c.sources.push_back(expr);
  }

  if (auto v = take("source.basis")) {
    if (*v == "physical") {
      c.basis = SourceBasis::kPhysical;
    } else if (*v == "tilde") {
      c.basis = SourceBasis::kTilde;
    } else {
      bad_value("source.basis", *v, "physical or tilde");
    }
  }
  if (auto v = take("mu")) c.mu = parse_double("mu", *v);
  if (auto v = take("sweep.mode")) {
    if (*v == "auto") {
      c.sweep.automatic = true;
    } else if (*v == "range") {
      c.sweep.automatic = false;
    } else {
      bad_value("sweep.mode", *v, "auto or range");
    }
  }
  if (auto v = take("sweep.count")) {
    c.sweep.count = parse_int("sweep.count", *v);
    if (c.sweep.count < 1) bad_value("sweep.count", *v, "a positive integer");
  }
  const auto sweep_min = take("sweep.min");
  const auto sweep_max = take("sweep.max");
  if (sweep_min) c.sweep.min = parse_double("sweep.min", *sweep_min);
  if (sweep_max) c.sweep.max = parse_double("sweep.max", *sweep_max);
  if (!c.sweep.automatic) {
    if (!sweep_min || !sweep_max) throw ConfigError("missing_key", "sweep.mode = range needs sweep.min and sweep.max");
    if (!(c.sweep.max >= c.sweep.min)) bad_value("sweep.max", *sweep_max, "a value >= sweep.min");
  }
  if (auto v = take("sweep.halfwidth")) {
    c.sweep.halfwidth = parse_double("sweep.halfwidth", *v);
    if (!(*c.sweep.halfwidth > 0.0)) bad_value("sweep.halfwidth", *v, "a positive number");
  }
  if (auto v = take("q")) {
    c.q = parse_double("q", *v);
    if (!(*c.q >= 2.0)) bad_value("q", *v, "a number >= 2");
  }
  if (auto v = take("tol")) {
    c.tol = parse_double("tol", *v);
    if (!(c.tol > 0.0)) bad_value("tol", *v, "a positive number");
  }
  if (auto v = take("output")) c.output = *v;
  if (auto v = take("amp.scales")) {
    c.amp_scales = parse_doubles("amp.scales", *v);
    if (c.amp_scales.empty()) bad_value("amp.scales", *v, "a nonempty list");
  }
  if (auto v = take("amp.scalar")) c.amp_scalar = parse_bool("amp.scalar", *v);
  if (auto v = take("annex.theorem")) {
    if (*v != "mixed_above" && *v != "negative_above" && *v != "positive_below" && *v != "all") {
      bad_value("annex.theorem", *v, "mixed_above, negative_above, positive_below or all");
    }
    c.annex_theorem = *v;
  }

  if (!entries.empty()) {
    const auto& [key, value] = *entries.begin();
    throw ConfigError("unknown_key", "line " + std::to_string(lines[key]) + ": unknown key '" + key + "'");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("unreadable_config", "cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

DomainGrid make_grid(const ExperimentConfig& config) {
  return build_grid(config.dimension, std::span<const double>(config.extents.data(), config.dimension),
                    std::span<const int>(config.resolution.data(), config.dimension));
}

// ---------------------------------------------------------------------------
// Source expressions

struct SourceExpression::Node {
  enum class Kind { kNumber, kMode, kSine, kPoly, kPolyY, kMax0, kNeg, kAdd, kSub, kMul, kDiv };
  Kind kind = Kind::kNumber;
  std::vector<double> args;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = SourceExpression::Node;
using NodePtr = std::shared_ptr<const Node>;

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("invalid_source",
                      "source '" + std::string(text_) + "' at column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  static NodePtr binary(Node::Kind kind, NodePtr lhs, NodePtr rhs) {
    auto node = std::make_shared<Node>();
    node->kind = kind;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
  }

  NodePtr expr() {
    NodePtr left = term();
    for (;;) {
      if (accept('+')) {
        left = binary(Node::Kind::kAdd, left, term());
      } else if (accept('-')) {
        left = binary(Node::Kind::kSub, left, term());
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      if (accept('*')) {
        left = binary(Node::Kind::kMul, left, unary());
      } else if (accept('/')) {
        left = binary(Node::Kind::kDiv, left, unary());
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    if (accept('+')) return unary();
    if (accept('-')) {
      auto node = std::make_shared<Node>();
      node->kind = Node::Kind::kNeg;
      node->lhs = unary();
      return node;
    }
    return primary();
  }

  double number() {
    skip_space();
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc() || !std::isfinite(v)) fail("expected a number");
    pos_ = static_cast<std::size_t>(end - text_.data());
    return v;
  }

  std::vector<double> number_list() {
    std::vector<double> out;
    expect('(');
    if (accept(')')) return out;
    do {
      double sign = 1.0;
      if (accept('-')) sign = -1.0;
      else accept('+');
      out.push_back(sign * number());
    } while (accept(','));
    expect(')');
    return out;
  }

  NodePtr primary() {
    skip_space();
    if (accept('(')) {
      NodePtr inside = expr();
      expect(')');
      return inside;
    }
    if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      auto node = std::make_shared<Node>();
      node->args = {number()};
      return node;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name.empty()) fail("expected a number, a function or '('");

    auto node = std::make_shared<Node>();
    if (name == "max0") {
      node->kind = Node::Kind::kMax0;
      expect('(');
      node->lhs = expr();
      expect(')');
      return node;
    }
    node->args = number_list();
    const std::size_t count = node->args.size();
    auto integral = [&](double v) { return v == std::floor(v) && v >= 1.0; };
    if (name == "mode") {
      node->kind = Node::Kind::kMode;
      if (count != 1 || (node->args[0] != 1.0 && node->args[0] != 2.0)) fail("mode(k) takes k = 1 or 2");
    } else if (name == "sine") {
      node->kind = Node::Kind::kSine;
      if (count < 1 || count > 2 || !std::all_of(node->args.begin(), node->args.end(), integral)) {
        fail("sine takes one or two positive integers");
      }
    } else if (name == "const") {
      node->kind = Node::Kind::kNumber;
      if (count != 1) fail("const takes one number");
    } else if (name == "poly" || name == "polyy") {
      node->kind = name == "poly" ? Node::Kind::kPoly : Node::Kind::kPolyY;
      if (count == 0) fail(std::string(name) + " needs at least one coefficient");
    } else {
      pos_ = start;
      fail("unknown function '" + std::string(name) + "'");
    }
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<double> eval(const Node& node, const DomainSpectrum& spectrum) {
  const DomainGrid& grid = spectrum.grid();
  const std::size_t size = grid.node_count();
  auto field = [&](auto f) {
    GridFunction g = sample(grid, f);
    return std::vector<double>(g.values().begin(), g.values().end());
  };
  auto combine2 = [&](auto op) {
    std::vector<double> a = eval(*node.lhs, spectrum);
    const std::vector<double> b = eval(*node.rhs, spectrum);
    for (std::size_t i = 0; i < size; ++i) a[i] = op(a[i], b[i]);
    return a;
  };
  switch (node.kind) {
    case Node::Kind::kNumber:
      return std::vector<double>(size, node.args[0]);
    case Node::Kind::kMode: {
      const GridFunction& phi = node.args[0] == 1.0 ? spectrum.phi1 : spectrum.phi2;
      return std::vector<double>(phi.values().begin(), phi.values().end());
    }
    case Node::Kind::kSine: {
      const double kx = node.args[0];
      const double ky = node.args.size() > 1 ? node.args[1] : 1.0;
      const double lx = grid.extents[0], ly = grid.extents[1];
      const bool two_d = grid.dimension == 2;
      return field([&](double x, double y) {
        double v = std::sin(kx * std::numbers::pi * x / lx);
        if (two_d) v *= std::sin(ky * std::numbers::pi * y / ly);
        return v;
      });
    }
    case Node::Kind::kPoly:
    case Node::Kind::kPolyY: {
      const bool in_y = node.kind == Node::Kind::kPolyY;
      return field([&](double x, double y) {
        const double t = in_y ? y : x;
        double v = 0.0;
        for (auto it = node.args.rbegin(); it != node.args.rend(); ++it) v = v * t + *it;
        return v;
      });
    }
    case Node::Kind::kMax0: {
      std::vector<double> v = eval(*node.lhs, spectrum);
      for (double& x : v) x = std::max(x, 0.0);
      return v;
    }
    case Node::Kind::kNeg: {
      std::vector<double> v = eval(*node.lhs, spectrum);
      for (double& x : v) x = -x;
      return v;
    }
    case Node::Kind::kAdd:
      return combine2([](double a, double b) { return a + b; });
    case Node::Kind::kSub:
      return combine2([](double a, double b) { return a - b; });
    case Node::Kind::kMul:
      return combine2([](double a, double b) { return a * b; });
    case Node::Kind::kDiv:
      return combine2([](double a, double b) { return a / b; });
  }
  return {};
}

}  // namespace

SourceExpression SourceExpression::parse(std::string_view text) {
  SourceExpression e;
  e.text_ = std::string(text);
  e.root_ = Parser(e.text_).parse();
  return e;
}

GridFunction SourceExpression::evaluate(const DomainSpectrum& spectrum) const {
  std::vector<double> v = eval(*root_, spectrum);
  for (double x : v) {
    if (!std::isfinite(x)) throw ConfigError("invalid_source", "source '" + text_ + "' is not finite on the grid");
  }
  return GridFunction(spectrum.grid(), std::move(v));
}

std::vector<GridFunction> build_sources(const ExperimentConfig& config, const CouplingMatrix& cm,
                                        const DomainSpectrum& spectrum) {
  std::vector<GridFunction> f;
  for (const std::string& s : config.sources) f.push_back(SourceExpression::parse(s).evaluate(spectrum));
  if (config.basis == SourceBasis::kTilde) return combine(cm.p(), f);
  return f;
}

}  // namespace signlab::lab
