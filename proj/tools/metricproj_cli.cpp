// metricproj: build instances, solve them, benchmark fixed-pass runs and
// inspect the parallel schedule.
//
// Exit codes: 0 success, 1 usage, 2 input error, 3 verification failure.

#include "metricproj/instance.hpp"
#include "metricproj/io.hpp"
#include "metricproj/schedule.hpp"
#include "metricproj/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

using namespace metricproj;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitVerify = 3;

// METRICPROJ_MAX_WORKERS caps the worker count (useful on shared CI hosts).
int capped_workers(int requested) {
  if (const char* cap = std::getenv("METRICPROJ_MAX_WORKERS")) {
    const int limit = std::atoi(cap);
    if (limit >= 1 && requested > limit) return limit;
  }
  return requested;
}

const std::map<std::string, ScheduleKind> kScheduleNames{
    {"serial", ScheduleKind::serial}, {"diagonal", ScheduleKind::diagonal}, {"tiled", ScheduleKind::tiled}};

struct BuildArgs {
  std::string graph, out;
  double offset = 0.01;
  double epsilon = 0.2;
};

struct SolveArgs {
  std::string instance, out, stats;
  int workers = 1;
  Index tile = 40;
  std::optional<int> passes;
  double tol_gap = 1e-4;
  double tol_viol = 1e-4;
  int max_passes = 100;
  std::optional<double> epsilon;
  ScheduleKind schedule = ScheduleKind::tiled;
};

struct BenchArgs {
  std::string instance, out;
  std::vector<int> workers{1};
  std::vector<Index> tiles{40};
  int passes = 20;
  ScheduleKind schedule = ScheduleKind::tiled;
};

struct ScheduleArgs {
  Index n = 12;
  Index tile = 1;
  int workers = 1;
  bool verify = false;
};

int run_build(const BuildArgs& a) {
  const EdgeListReport report = load_edge_list(a.graph);
  const Graph component = largest_component(report.graph);
  SignedScore params;
  params.offset = a.offset;
  const auto instance = cc_instance(component, params, a.epsilon);
  save_instance(instance, a.out);
  Index negative = 0;
  for (Index p = 0; p < instance.pairs(); ++p) negative += instance.d()[p] > 0;
  std::printf("graph: %lld nodes, %zu edges (%zu duplicate, %zu self-loop lines dropped)\n",
              static_cast<long long>(report.graph.nodes), report.graph.edge_count(), report.duplicates,
              report.self_loops);
  std::printf("largest component: n = %lld, %zu edges\n", static_cast<long long>(component.nodes),
              component.edge_count());
  std::printf("instance: %lld pairs (%lld positive, %lld negative), %llu constraints -> %s\n",
              static_cast<long long>(instance.pairs()), static_cast<long long>(instance.pairs() - negative),
              static_cast<long long>(negative), static_cast<unsigned long long>(constraint_count(instance.n())),
              a.out.c_str());
  return 0;
}

int run_solve(const SolveArgs& a) {
  auto instance = load_instance(a.instance);
  SolverConfig config;
  config.workers = capped_workers(a.workers);
  config.tile_size = a.tile;
  config.schedule_kind = a.schedule;
  config.epsilon = a.epsilon;
  config.fixed_passes = a.passes;
  config.max_passes = a.max_passes;
  config.tol_gap = a.tol_gap;
  config.tol_violation = a.tol_viol;

  std::ofstream stats_out;
  if (!a.stats.empty()) {
    stats_out.open(a.stats);
    if (!stats_out) throw InputError(a.stats + ": cannot open for writing");
  }
  Solver<double> solver(std::move(instance), config);
  const auto solution = solver.solve([&](const PassStats& s) {
    if (stats_out.is_open()) write_stats_line(s, stats_out);
  });
  if (!a.out.empty()) save_solution(solution.state, a.out);

  const PassStats last = solution.stats.empty() ? PassStats{} : solution.stats.back();
  std::printf("passes: %d\n", solution.passes_run);
  std::printf("steps: %llu\n", static_cast<unsigned long long>(solver.total_steps()));
  std::printf("converged: %s\n", solution.converged ? "true" : "false");
  std::printf("primal: %.12g\ndual: %.12g\n", last.primal_objective, last.dual_objective);
  std::printf("gap: %.6e\nmax_violation: %.6e\n", last.duality_gap, last.max_violation);
  std::printf("wall_time: %.6f\n", solution.pass_seconds());
  return 0;
}

int run_bench(const BenchArgs& a) {
  const auto instance = load_instance(a.instance);
  nlohmann::json rows = nlohmann::json::array();
  std::printf("%8s %6s %7s %12s %8s\n", "workers", "tile", "passes", "seconds", "speedup");
  for (Index tile : a.tiles) {
    std::vector<int> workers = a.workers;
    if (std::find(workers.begin(), workers.end(), 1) == workers.end()) workers.insert(workers.begin(), 1);
    std::sort(workers.begin(), workers.end());
    double baseline = 0;
    for (int p : workers) {
      SolverConfig config;
      config.workers = capped_workers(p);
      config.tile_size = tile;
      config.schedule_kind = a.schedule;
      config.fixed_passes = a.passes;
      const double seconds = solve(instance, config).pass_seconds();
      if (p == 1) baseline = seconds;
      const double speedup = seconds > 0 ? baseline / seconds : 0.0;
      std::printf("%8d %6lld %7d %12.4f %8.2f\n", config.workers, static_cast<long long>(tile), a.passes, seconds,
                  speedup);
      rows.push_back({{"workers", config.workers},
                      {"tile_size", tile},
                      {"passes", a.passes},
                      {"seconds", seconds},
                      {"speedup", speedup}});
    }
  }
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw InputError(a.out + ": cannot open for writing");
    out << nlohmann::json{{"n", instance.n()}, {"rows", rows}}.dump(2) << '\n';
  }
  return 0;
}

int run_schedule(const ScheduleArgs& a) {
  const auto rounds = tiled_rounds(a.n, a.tile);
  const int workers = capped_workers(a.workers);
  for (std::size_t r = 0; r < rounds.size(); ++r)
    for (std::size_t pos = 0; pos < rounds[r].size(); ++pos) {
      const Tile& t = rounds[r][pos];
      const int w = assigned_worker(pos, workers, r);
      if (a.tile == 1) {
        std::printf("round %zu: S_{%lld,%lld} -> worker %d\n", r + 1, static_cast<long long>(t.x + 1),
                    static_cast<long long>(t.z + 1), w);
      } else {
        std::printf("round %zu: tile(%lld,%lld) {", r + 1, static_cast<long long>(t.x + 1),
                    static_cast<long long>(t.z + 1));
        const char* sep = "";
        for (const TripletSet& s : tile_sets(t, a.n)) {
          std::printf("%sS_{%lld,%lld}", sep, static_cast<long long>(s.i + 1), static_cast<long long>(s.k + 1));
          sep = " ";
        }
        std::printf("} -> worker %d\n", w);
      }
    }
  if (a.verify) {
    std::string problem = check_partition(rounds, a.n);
    if (problem.empty()) problem = check_independence(rounds, a.n);
    if (!problem.empty()) {
      std::fprintf(stderr, "verify: FAILED: %s\n", problem.c_str());
      return kExitVerify;
    }
    std::printf("verify: ok (%zu rounds, partition and independence hold)\n", rounds.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel Dykstra solver for metric-constrained LP relaxations"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build", "Build a correlation-clustering instance from an edge list");
  build_cmd->add_option("--graph", build.graph, "Edge list file")->required();
  build_cmd->add_option("--out", build.out, "Instance file to write")->required();
  build_cmd->add_option("--offset", build.offset, "Score offset away from zero")->check(CLI::PositiveNumber);
  build_cmd->add_option("--epsilon", build.epsilon, "Regularization stored in the instance")
      ->check(CLI::PositiveNumber);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Run Dykstra passes on an instance");
  solve_cmd->add_option("--instance", solve_args.instance, "Instance file")->required();
  solve_cmd->add_option("--workers", solve_args.workers, "Worker threads")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--tile", solve_args.tile, "Tile size")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--schedule", solve_args.schedule, "serial, diagonal or tiled")
      ->transform(CLI::CheckedTransformer(kScheduleNames, CLI::ignore_case));
  auto* passes_opt = solve_cmd->add_option("--passes", solve_args.passes, "Run exactly this many passes")
                         ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--tol-gap", solve_args.tol_gap, "Relative duality gap tolerance")
      ->check(CLI::PositiveNumber)
      ->excludes(passes_opt);
  solve_cmd->add_option("--tol-viol", solve_args.tol_viol, "Constraint violation tolerance")
      ->check(CLI::PositiveNumber)
      ->excludes(passes_opt);
  solve_cmd->add_option("--max-passes", solve_args.max_passes, "Pass budget in tolerance mode")
      ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--epsilon", solve_args.epsilon, "Override the instance's epsilon")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--out", solve_args.out, "Solution dump");
  solve_cmd->add_option("--stats", solve_args.stats, "Per-pass statistics (JSON lines)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Fixed-pass timing over worker counts and tile sizes");
  bench_cmd->add_option("--instance", bench.instance, "Instance file")->required();
  bench_cmd->add_option("--workers", bench.workers, "Worker counts")->delimiter(',')->check(CLI::PositiveNumber);
  bench_cmd->add_option("--tile", bench.tiles, "Tile sizes")->delimiter(',')->check(CLI::PositiveNumber);
  bench_cmd->add_option("--passes", bench.passes, "Passes per run")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--schedule", bench.schedule, "serial, diagonal or tiled")
      ->transform(CLI::CheckedTransformer(kScheduleNames, CLI::ignore_case));
  bench_cmd->add_option("--out", bench.out, "JSON report");

  ScheduleArgs sched;
  auto* sched_cmd = app.add_subcommand("schedule", "Print the round/worker assignment");
  sched_cmd->add_option("--n", sched.n, "Number of objects")->required()->check(CLI::Range(3, 1 << 20));
  sched_cmd->add_option("--tile", sched.tile, "Tile size (1 = plain diagonals)")->check(CLI::PositiveNumber);
  sched_cmd->add_option("--workers", sched.workers, "Worker count")->check(CLI::PositiveNumber);
  sched_cmd->add_flag("--verify", sched.verify, "Check partition and independence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*build_cmd) return run_build(build);
    if (*solve_cmd) return run_solve(solve_args);
    if (*bench_cmd) return run_bench(bench);
    if (*sched_cmd) return run_schedule(sched);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitUsage;
}
