#pragma once

// Correlation-clustering instances built from unsigned graphs, plus the
// text formats the command-line tools read and write.

#include "metricproj/core.hpp"

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace metricproj {

// Malformed or unreadable input; the message carries file/line context.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Simple undirected graph with sorted adjacency lists.
struct Graph {
  Index nodes = 0;
  std::vector<std::vector<Index>> adjacency;
  std::vector<long long> labels;  // original node ids

  std::size_t edge_count() const;
};

struct EdgeListReport {
  Graph graph;
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
};

// Lines "u v"; blank lines and lines starting with '#' or '%' are skipped.
// Nodes are numbered in order of first appearance.
EdgeListReport parse_edge_list(std::istream& in, const std::string& source = "<stream>");
EdgeListReport load_edge_list(const std::string& path);

// Induced subgraph on the largest connected component (ties go to the
// component containing the lowest-numbered node), keeping node order.
Graph largest_component(const Graph& graph);

// |N[i] ∩ N[j]| / |N[i] ∪ N[j]| with closed neighborhoods.
double jaccard(const Graph& graph, Index i, Index j);

struct SignedScore {
  double guard = 0.05;   // shift inside the log-odds map
  double cap = 10.0;     // |score| bound before offsetting
  double offset = 0.01;  // pushed away from zero by this much
};

// log((1 + J - guard) / (1 - J + guard)), clamped to [-cap, cap], then moved
// away from zero by `offset` (nonnegative scores go up, negative go down).
double signed_score(double jaccard_index, const SignedScore& params = {});

// Dense instance: positive pairs get d = 0 and w = score, negative pairs get
// d = 1 and w = -score.
ProblemInstance<double> cc_instance(const Graph& graph, const SignedScore& params = {}, double epsilon = 0.2);

// Instance files: header "metricinst 1 <n> <epsilon>" followed by one row
// "i j d_ij w_ij" per pair in lexicographic order, 1-indexed.
void write_instance(const ProblemInstance<double>& instance, std::ostream& out);
ProblemInstance<double> read_instance(std::istream& in, const std::string& source = "<stream>");
void save_instance(const ProblemInstance<double>& instance, const std::string& path);
ProblemInstance<double> load_instance(const std::string& path);

}  // namespace metricproj
