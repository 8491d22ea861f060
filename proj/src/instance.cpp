#include "metricproj/instance.hpp"

#include "metricproj/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace metricproj {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Splits on blanks/tabs.
std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Graph build_graph(std::vector<long long> labels, const std::vector<std::pair<Index, Index>>& edges) {
  Graph g;
  g.nodes = static_cast<Index>(labels.size());
  g.labels = std::move(labels);
  g.adjacency.assign(static_cast<std::size_t>(g.nodes), {});
  for (const auto& [u, v] : edges) {
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  for (auto& nbrs : g.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

}  // namespace

std::size_t Graph::edge_count() const {
  std::size_t total = 0;
  for (const auto& nbrs : adjacency) total += nbrs.size();
  return total / 2;
}

EdgeListReport parse_edge_list(std::istream& in, const std::string& source) {
  EdgeListReport report;
  std::unordered_map<long long, Index> ids;
  std::vector<long long> labels;
  std::vector<std::pair<Index, Index>> edges;
  std::unordered_map<std::uint64_t, char> seen;
  auto id_of = [&](long long label) {
    auto [it, inserted] = ids.emplace(label, static_cast<Index>(labels.size()));
    if (inserted) labels.push_back(label);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#' || text.front() == '%') continue;
    const auto parts = fields(text);
    long long a = 0, b = 0;
    if (parts.size() < 2 || !parse_number(parts[0], a) || !parse_number(parts[1], b))
      throw InputError(source + ":" + std::to_string(line_no) + ": expected \"u v\" node ids, got \"" +
                       std::string(text) + "\"");
    if (a == b) {
      id_of(a);
      ++report.self_loops;
      continue;
    }
    Index u = id_of(a), v = id_of(b);
    if (u > v) std::swap(u, v);
    const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
    if (!seen.emplace(key, 1).second) {
      ++report.duplicates;
      continue;
    }
    edges.emplace_back(u, v);
  }
  report.graph = build_graph(std::move(labels), edges);
  return report;
}

EdgeListReport load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  return parse_edge_list(in, path);
}

Graph largest_component(const Graph& graph) {
  if (graph.nodes == 0) throw DomainError("largest_component: graph is empty");
  std::vector<Index> component(static_cast<std::size_t>(graph.nodes), -1);
  Index best = -1, best_size = 0, count = 0;
  for (Index s = 0; s < graph.nodes; ++s) {
    if (component[s] >= 0) continue;
    Index size = 0;
    std::queue<Index> queue;
    queue.push(s);
    component[s] = count;
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop();
      ++size;
      for (Index v : graph.adjacency[u])
        if (component[v] < 0) {
          component[v] = count;
          queue.push(v);
        }
    }
    if (size > best_size) {
      best = count;
      best_size = size;
    }
    ++count;
  }

  std::vector<Index> relabel(static_cast<std::size_t>(graph.nodes), -1);
  std::vector<long long> labels;
  for (Index u = 0; u < graph.nodes; ++u)
    if (component[u] == best) {
      relabel[u] = static_cast<Index>(labels.size());
      labels.push_back(graph.labels.empty() ? u : graph.labels[u]);
    }
  std::vector<std::pair<Index, Index>> edges;
  for (Index u = 0; u < graph.nodes; ++u)
    if (component[u] == best)
      for (Index v : graph.adjacency[u])
        if (u < v) edges.emplace_back(relabel[u], relabel[v]);
  return build_graph(std::move(labels), edges);
}

double jaccard(const Graph& graph, Index i, Index j) {
  auto closed = [&](Index u) {
    std::vector<Index> nbrs = graph.adjacency[u];
    nbrs.insert(std::lower_bound(nbrs.begin(), nbrs.end(), u), u);
    return nbrs;
  };
  const auto a = closed(i), b = closed(j);
  std::size_t common = 0;
  for (std::size_t p = 0, q = 0; p < a.size() && q < b.size();) {
    if (a[p] < b[q]) ++p;
    else if (b[q] < a[p]) ++q;
    else { ++common; ++p; ++q; }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

double signed_score(double jaccard_index, const SignedScore& params) {
  double s = std::log((1.0 + jaccard_index - params.guard) / (1.0 - jaccard_index + params.guard));
  s = std::clamp(s, -params.cap, params.cap);
  return s >= 0 ? s + params.offset : s - params.offset;
}

ProblemInstance<double> cc_instance(const Graph& graph, const SignedScore& params, double epsilon) {
  const Index n = graph.nodes;
  if (n < 3) throw DomainError("cc_instance: need at least 3 nodes, got " + std::to_string(n));
  if (!(params.offset > 0)) throw DomainError("cc_instance: offset must be positive");

  // Closed-neighborhood intersections, one marked row at a time; pairs more
  // than two hops apart keep J = 0.
  std::vector<std::vector<Index>> closed(static_cast<std::size_t>(n));
  for (Index u = 0; u < n; ++u) {
    closed[u] = graph.adjacency[u];
    closed[u].insert(std::lower_bound(closed[u].begin(), closed[u].end(), u), u);
  }
  VectorX<double> d(pair_count(n)), w(pair_count(n));
  const double zero_score = signed_score(0.0, params);
  std::vector<Index> common(static_cast<std::size_t>(n), 0);
  std::vector<Index> touched;
  for (Index i = 0; i < n; ++i) {
    touched.clear();
    for (Index a : closed[i])
      for (Index j : closed[a])
        if (j > i) {
          if (common[j]++ == 0) touched.push_back(j);
        }
    for (Index j = i + 1; j < n; ++j) {
      double s = zero_score;
      if (common[j] > 0) {
        const auto shared = static_cast<double>(common[j]);
        const double jac = shared / (static_cast<double>(closed[i].size() + closed[j].size()) - shared);
        s = signed_score(jac, params);
      }
      const Index p = pair_index(i, j);
      d[p] = s > 0 ? 0.0 : 1.0;
      w[p] = std::abs(s);
    }
    for (Index j : touched) common[j] = 0;
  }
  return ProblemInstance<double>(n, std::move(d), std::move(w), epsilon);
}

void write_instance(const ProblemInstance<double>& instance, std::ostream& out) {
  const Index n = instance.n();
  out << "metricinst 1 " << n << ' ' << format_exact(instance.epsilon()) << '\n';
  std::string buffer;
  buffer.reserve(1 << 16);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      buffer += std::to_string(i + 1);
      buffer += ' ';
      buffer += std::to_string(j + 1);
      buffer += ' ';
      buffer += format_exact(instance.d(i, j));
      buffer += ' ';
      buffer += format_exact(instance.w(i, j));
      buffer += '\n';
    }
    if (buffer.size() > (1 << 15)) {
      out << buffer;
      buffer.clear();
    }
  }
  out << buffer;
}

ProblemInstance<double> read_instance(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return source + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  const auto head = fields(line);
  Index n = 0;
  double epsilon = 0;
  if (head.size() != 4 || head[0] != "metricinst" || head[1] != "1" || !parse_number(head[2], n) ||
      !parse_number(head[3], epsilon))
    throw InputError(where() + ": expected header \"metricinst 1 <n> <epsilon>\"");
  if (n < 3) throw InputError(where() + ": n must be at least 3");

  const Index expected = pair_count(n);
  VectorX<double> d(expected), w(expected);
  Index rows = 0;
  Index ei = 0, ej = 1;
  while (rows < expected && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto parts = fields(line);
    Index i = 0, j = 0;
    double dv = 0, wv = 0;
    if (parts.size() != 4 || !parse_number(parts[0], i) || !parse_number(parts[1], j) ||
        !parse_number(parts[2], dv) || !parse_number(parts[3], wv))
      throw InputError(where() + ": expected row \"i j d w\"");
    if (i != ei + 1 || j != ej + 1)
      throw InputError(where() + ": expected pair (" + std::to_string(ei + 1) + "," + std::to_string(ej + 1) +
                       "), found (" + std::to_string(i) + "," + std::to_string(j) + ")");
    d[pair_index(ei, ej)] = dv;
    w[pair_index(ei, ej)] = wv;
    ++rows;
    if (++ej == n) {
      ++ei;
      ej = ei + 1;
    }
  }
  if (rows != expected)
    throw InputError(source + ": expected " + std::to_string(expected) + " pair rows, found " +
                     std::to_string(rows));
  try {
    return ProblemInstance<double>(n, std::move(d), std::move(w), epsilon);
  } catch (const DomainError& e) {
    throw InputError(source + ": " + e.what());
  }
}

void save_instance(const ProblemInstance<double>& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open for writing");
  write_instance(instance, out);
  if (!out) throw InputError(path + ": write failed");
}

ProblemInstance<double> load_instance(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_instance(in, path);
}

}  // namespace metricproj
