#pragma once

// Solution dumps and per-pass statistics records.

#include "metricproj/core.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace metricproj {

// "n <n>" then "i j x_ij f_ij" per pair (1-indexed, i < j, lexicographic),
// 17 significant digits.
void write_solution(const PrimalState<double>& state, std::ostream& out);
void save_solution(const PrimalState<double>& state, const std::string& path);
PrimalState<double> read_solution(std::istream& in, const std::string& source = "<stream>");

nlohmann::json to_json(const PassStats& stats);
PassStats stats_from_json(const nlohmann::json& j);

// One JSON object per line.
void write_stats_line(const PassStats& stats, std::ostream& out);

// Shortest decimal text that reads back to the same double.
std::string format_exact(double value);
// %.17g
std::string format_17(double value);

}  // namespace metricproj
