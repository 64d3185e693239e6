#include "rippler/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>
#include <vector>

#include "rippler/errors.hpp"

namespace rippler {

namespace {

constexpr const char* kHeader = "t,j,value";

template <typename T, typename Format>
void write_grid(std::ostream& out, const Grid<T>& grid, Format format) {
  out << kHeader << '\n';
  for (int t = 0; t < grid.num_timepoints(); ++t) {
    for (int j = 0; j < grid.num_individuals(); ++j) {
      out << t + 1 << ',' << j + 1 << ',';
      format(out, grid(t, j));
      out << '\n';
    }
  }
}

struct Entry {
  int t;
  int j;
  std::string value;
};

std::vector<Entry> read_entries(std::istream& in, int& num_timepoints, int& num_individuals) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 9) != kHeader) {
    throw InvariantError("CSV grid: expected header 't,j,value'");
  }
  std::vector<Entry> entries;
  num_timepoints = 0;
  num_individuals = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw InvariantError("CSV grid: malformed line " + std::to_string(line_no));
    }
    Entry e{};
    auto parse = [&](std::string_view s, int& v) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size() || v < 1) {
        throw InvariantError("CSV grid: bad index on line " + std::to_string(line_no));
      }
    };
    std::string_view view(line);
    parse(view.substr(0, c1), e.t);
    parse(view.substr(c1 + 1, c2 - c1 - 1), e.j);
    e.value = line.substr(c2 + 1);
    num_timepoints = std::max(num_timepoints, e.t);
    num_individuals = std::max(num_individuals, e.j);
    entries.push_back(std::move(e));
  }
  if (entries.size() != static_cast<std::size_t>(num_timepoints) * num_individuals) {
    throw InvariantError("CSV grid: expected one row per (t, j) cell");
  }
  return entries;
}

template <typename T, typename Parse>
Grid<T> read_grid(std::istream& in, Parse parse) {
  int num_timepoints = 0;
  int num_individuals = 0;
  auto entries = read_entries(in, num_timepoints, num_individuals);
  Grid<T> grid(num_timepoints, num_individuals);
  for (const auto& e : entries) grid(e.t - 1, e.j - 1) = parse(e.value);
  return grid;
}

int parse_int(const std::string& s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw InvariantError("CSV grid: bad integer value '" + s + "'");
  }
  return v;
}

}  // namespace

void write_states(std::ostream& out, const HiddenStates& x) {
  write_grid(out, x, [](std::ostream& o, int s) { o << s + 1; });
}

void write_observations(std::ostream& out, const Observations& y) {
  write_grid(out, y, [](std::ostream& o, const Observation& v) {
    if (v) o << *v;
  });
}

void write_uniforms(std::ostream& out, const UniformGrid& u) {
  write_grid(out, u, [](std::ostream& o, double v) { o << std::setprecision(17) << v; });
}

HiddenStates read_states(std::istream& in) {
  return read_grid<int>(in, [](const std::string& s) {
    const int v = parse_int(s);
    if (v < 1) throw InvariantError("CSV grid: hidden states are 1-based");
    return v - 1;
  });
}

Observations read_observations(std::istream& in) {
  return read_grid<Observation>(in, [](const std::string& s) -> Observation {
    if (s.empty()) return std::nullopt;
    return parse_int(s);
  });
}

UniformGrid read_uniforms(std::istream& in) {
  return read_grid<double>(in, [](const std::string& s) {
    double v = 0.0;
    std::istringstream is(s);
    if (!(is >> v) || !(v > 0.0 && v < 1.0)) {
      throw InvariantError("CSV grid: uniform value must lie in (0, 1)");
    }
    return v;
  });
}

HiddenStates read_states_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvariantError("cannot open " + path);
  return read_states(in);
}

Observations read_observations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvariantError("cannot open " + path);
  return read_observations(in);
}

}  // namespace rippler
