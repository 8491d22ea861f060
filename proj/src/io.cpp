#include "metricproj/io.hpp"

#include "metricproj/instance.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace metricproj {

std::string format_exact(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string format_17(double value) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(len));
}

void write_solution(const PrimalState<double>& state, std::ostream& out) {
  out << "n " << state.n << '\n';
  std::string buffer;
  for (Index i = 0; i < state.n; ++i) {
    for (Index j = i + 1; j < state.n; ++j) {
      buffer += std::to_string(i + 1);
      buffer += ' ';
      buffer += std::to_string(j + 1);
      buffer += ' ';
      buffer += format_17(state.x_at(i, j));
      buffer += ' ';
      buffer += format_17(state.f_at(i, j));
      buffer += '\n';
    }
    if (buffer.size() > (1 << 15)) {
      out << buffer;
      buffer.clear();
    }
  }
  out << buffer;
}

void save_solution(const PrimalState<double>& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open for writing");
  write_solution(state, out);
  if (!out) throw InputError(path + ": write failed");
}

PrimalState<double> read_solution(std::istream& in, const std::string& source) {
  std::string word;
  Index n = 0;
  if (!(in >> word >> n) || word != "n" || n < 3) throw InputError(source + ": expected header \"n <n>\"");
  PrimalState<double> state(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      Index a = 0, b = 0;
      double x = 0, f = 0;
      if (!(in >> a >> b >> x >> f) || a != i + 1 || b != j + 1)
        throw InputError(source + ": bad or missing row for pair (" + std::to_string(i + 1) + "," +
                         std::to_string(j + 1) + ")");
      state.x_at(i, j) = x;
      state.f_at(i, j) = f;
    }
  return state;
}

nlohmann::json to_json(const PassStats& s) {
  return {{"pass_index", s.pass_index},          {"primal_objective", s.primal_objective},
          {"dual_objective", s.dual_objective},  {"duality_gap", s.duality_gap},
          {"max_violation", s.max_violation},    {"wall_time", s.wall_time},
          {"steps", s.steps}};
}

PassStats stats_from_json(const nlohmann::json& j) {
  PassStats s;
  s.pass_index = j.at("pass_index").get<Index>();
  s.primal_objective = j.at("primal_objective").get<double>();
  s.dual_objective = j.at("dual_objective").get<double>();
  s.duality_gap = j.at("duality_gap").get<double>();
  s.max_violation = j.at("max_violation").get<double>();
  s.wall_time = j.at("wall_time").get<double>();
  s.steps = j.value("steps", std::uint64_t{0});
  return s;
}

void write_stats_line(const PassStats& stats, std::ostream& out) { out << to_json(stats).dump() << '\n'; }

}  // namespace metricproj
