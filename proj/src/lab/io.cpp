#include "signlab/lab/io.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "signlab/error.hpp"

namespace signlab::lab {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw NumericalFailure("format", "cannot format a double");
  return std::string(buf.data(), end);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + 16, h, 16);
  std::string out(buf.data(), end);
  return std::string(16 - out.size(), '0') + out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

std::string grid_function_csv(const GridFunction& g) {
  const DomainGrid& grid = g.grid();
  std::string out = "# dimension=" + std::to_string(grid.dimension) + " extents=";
  for (int a = 0; a < grid.dimension; ++a) out += (a ? "," : "") + format_double(grid.extents[a]);
  out += " resolution=";
  for (int a = 0; a < grid.dimension; ++a) out += (a ? "," : "") + std::to_string(grid.resolution[a]);
  out += grid.dimension == 1 ? "\nx,value\n" : "\nx,y,value\n";
  const int nx = grid.resolution[0];
  const int ny = grid.dimension == 2 ? grid.resolution[1] : 1;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      out += format_double(grid.coordinate(0, ix));
      if (grid.dimension == 2) out += "," + format_double(grid.coordinate(1, iy));
      out += "," + format_double(g[grid.node(ix, iy)]) + "\n";
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("unwritable_output", "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ConfigError("unwritable_output", "write failed for " + path.string());
}

void write_grid_function(const std::filesystem::path& path, const GridFunction& g) {
  write_text(path, grid_function_csv(g));
}

namespace {

[[noreturn]] void bad_csv(const std::string& what) { throw ConfigError("bad_csv", what); }

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) bad_csv("bad number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

GridFunction parse_grid_function_csv(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < 2 || !lines[0].starts_with("# ")) bad_csv("missing grid header line");

  int dimension = 0;
  std::vector<double> extents;
  std::vector<int> resolution;
  for (std::string_view field : split(lines[0].substr(2), ' ')) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) bad_csv("bad header field '" + std::string(field) + "'");
    const std::string_view key = field.substr(0, eq);
    const std::string_view value = field.substr(eq + 1);
    if (key == "dimension") {
      dimension = static_cast<int>(to_double(value));
    } else if (key == "extents") {
      for (auto v : split(value, ',')) extents.push_back(to_double(v));
    } else if (key == "resolution") {
      for (auto v : split(value, ',')) resolution.push_back(static_cast<int>(to_double(v)));
    } else {
      bad_csv("unknown header field '" + std::string(key) + "'");
    }
  }
  const DomainGrid grid = build_grid(dimension, extents, resolution);
  const std::size_t columns = dimension == 1 ? 2 : 3;
  if (split(lines[1], ',').size() != columns) bad_csv("unexpected column header");
  if (lines.size() - 2 != static_cast<std::size_t>(grid.node_count())) bad_csv("row count does not match the grid");

  std::vector<double> values(grid.node_count());
  const int nx = grid.resolution[0];
  for (std::size_t r = 0; r < values.size(); ++r) {
    const auto cells = split(lines[r + 2], ',');
    if (cells.size() != columns) bad_csv("row " + std::to_string(r + 1) + " has the wrong number of cells");
    const int ix = static_cast<int>(r % nx);
    const int iy = static_cast<int>(r / nx);
    values[grid.node(ix, iy)] = to_double(cells.back());
  }
  return GridFunction(grid, std::move(values));
}

GridFunction read_grid_function(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad_csv("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_grid_function_csv(buffer.str());
}

std::string sweep_csv(const std::vector<SweepRow>& rows, int components) {
  std::string out = "mu,side";
  for (const char* group : {"pred_", "obs_", "normal_"}) {
    for (int i = 1; i <= components; ++i) out += "," + std::string(group) + std::to_string(i);
  }
  out += ",match,hf1_strict,hf1_weak,residual,u1_tilde_max\n";
  auto flag = [](bool b) { return b ? "true" : "false"; };
  for (const SweepRow& row : rows) {
    out += format_double(row.mu);
    if (row.status != "ok") {
      out += "," + row.status;
      out += std::string(3 * components + 5, ',') + "\n";
      continue;
    }
    const SignReport& r = row.report;
    out += "," + to_string(r.side);
    for (const auto* signs : {&r.predicted, &r.observed_interior, &r.observed_normal}) {
      for (Sign s : *signs) out += "," + to_string(s);
    }
    out += std::string(",") + flag(r.match) + "," + flag(r.hf1_strict) + "," + flag(r.hf1_weak);
    out += "," + format_double(row.residual) + "," + format_double(row.u1_tilde_max) + "\n";
  }
  return out;
}

}  // namespace signlab::lab
