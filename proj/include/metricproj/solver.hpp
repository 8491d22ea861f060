#pragma once

// Parallel Dykstra passes over a static execution plan.
//
// One pass visits every metric constraint (rounds separated by barriers, each
// worker walking its own tiles) and then every pair constraint (pairs split
// into contiguous blocks). Each worker owns its dual array, so a triplet is
// always handled by the same worker in the same relative order.

#include "metricproj/core.hpp"
#include "metricproj/projection.hpp"
#include "metricproj/schedule.hpp"
#include "metricproj/worker_team.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace metricproj {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  int workers = 1;
  Index tile_size = 40;
  // Overrides the instance's epsilon when set.
  std::optional<double> epsilon;
  int max_passes = 100;
  // Benchmark mode: run exactly this many passes, ignore tolerances.
  std::optional<int> fixed_passes;
  double tol_gap = 1e-4;
  double tol_violation = 1e-4;
  ScheduleKind schedule_kind = ScheduleKind::tiled;

  void validate() const {
    if (workers < 1) throw DomainError("SolverConfig: workers must be at least 1");
    if (tile_size < 1) throw DomainError("SolverConfig: tile size must be at least 1");
    if (epsilon && !(*epsilon > 0)) throw DomainError("SolverConfig: epsilon must be positive");
    if (max_passes < 0) throw DomainError("SolverConfig: max_passes must be nonnegative");
    if (fixed_passes && *fixed_passes < 0) throw DomainError("SolverConfig: fixed_passes must be nonnegative");
    if (!(tol_gap > 0) || !(tol_violation > 0)) throw DomainError("SolverConfig: tolerances must be positive");
  }
};

template <typename Scalar = double>
struct Solution {
  PrimalState<Scalar> state;
  std::vector<PassStats> stats;
  bool converged = false;
  int passes_run = 0;

  double pass_seconds() const {
    double total = 0;
    for (const auto& s : stats) total += s.wall_time;
    return total;
  }
};

// Algorithm start point: y = 0, v = -(1/eps) W^{-1} c, i.e. x = 0 and
// f_ij = -w_ij / (eps W_f(ij)).
template <typename Scalar>
std::pair<PrimalState<Scalar>, DualStore<Scalar>> initialize(const ProblemInstance<Scalar>& instance,
                                                             int workers = 1) {
  instance.validate();
  PrimalState<Scalar> state(instance.n());
  if (instance.unit_weights())
    state.f = -instance.w() / instance.epsilon();
  else
    state.f = -(instance.w().array() / instance.f_weights().array()).matrix() / instance.epsilon();
  return {std::move(state), DualStore<Scalar>(instance.n(), workers)};
}

template <typename Scalar = double>
class Solver {
 public:
  Solver(ProblemInstance<Scalar> instance, SolverConfig config)
      : instance_(std::move(instance)), config_(std::move(config)) {
    config_.validate();
    if (config_.epsilon) instance_.set_epsilon(static_cast<Scalar>(*config_.epsilon));
    instance_.validate();
    plan_ = make_plan(instance_.n(), config_.schedule_kind, config_.tile_size, config_.workers);
    auto [state, duals] = initialize(instance_, config_.workers);
    state_ = std::move(state);
    duals_ = std::move(duals);
    team_ = std::make_unique<WorkerTeam>(config_.workers);
    if (!instance_.unit_weights()) {
      inv_x_weights_ = instance_.x_weights().cwiseInverse();
      inv_f_weights_ = instance_.f_weights().cwiseInverse();
    }
  }

  const ProblemInstance<Scalar>& instance() const { return instance_; }
  const SolverConfig& config() const { return config_; }
  const ExecutionPlan& plan() const { return plan_; }
  const PrimalState<Scalar>& state() const { return state_; }
  const DualStore<Scalar>& duals() const { return duals_; }
  int passes_run() const { return passes_; }
  std::uint64_t total_steps() const { return total_steps_; }

  // One full pass over all constraints, followed by the convergence metrics.
  PassStats run_pass() {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t rounds = plan_.round_count();
    const int p = team_->size();
    std::vector<std::uint64_t> steps(static_cast<std::size_t>(p), 0);
    std::vector<long> bad_round(static_cast<std::size_t>(p), -1);
    std::vector<char> bad_pairs(static_cast<std::size_t>(p), 0);

    duals_.begin_pass();
    team_->run([&](int w) {
      auto cursor = duals_.cursor(w);
      std::uint64_t count = 0;
      for (std::size_t r = 0; r < rounds; ++r) {
        Scalar delta_sum = 0;
        if (instance_.unit_weights())
          visit_metric<true>(r, w, cursor, count, delta_sum);
        else
          visit_metric<false>(r, w, cursor, count, delta_sum);
        if (!std::isfinite(delta_sum) && bad_round[w] < 0) bad_round[w] = static_cast<long>(r);
        team_->sync();
      }
      const Index m = instance_.pairs();
      const Index lo = m * w / p, hi = m * (w + 1) / p;
      bad_pairs[w] = !visit_pairs(lo, hi, count);
      steps[w] = count;
    });
    duals_.end_pass();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    ++passes_;
    PassStats stats;
    stats.pass_index = passes_;
    stats.wall_time = seconds;
    for (auto s : steps) stats.steps += s;
    total_steps_ += stats.steps;
    for (int w = 0; w < p; ++w)
      if (bad_round[w] >= 0)
        throw NumericalError("non-finite value in pass " + std::to_string(passes_) + ", metric round " +
                             std::to_string(bad_round[w] + 1) + " (worker " + std::to_string(w) + ")");
    for (int w = 0; w < p; ++w)
      if (bad_pairs[w])
        throw NumericalError("non-finite value in pass " + std::to_string(passes_) + ", pair phase");
    if (!state_.all_finite())
      throw NumericalError("non-finite value in pass " + std::to_string(passes_) + " after the last round");

    stats.max_violation = static_cast<double>(parallel_max_violation());
    stats.primal_objective = static_cast<double>(primal_objective(instance_, state_));
    stats.dual_objective = static_cast<double>(dual_objective(instance_, state_, duals_));
    stats.duality_gap = stats.primal_objective - stats.dual_objective;
    return stats;
  }

  bool meets_tolerances(const PassStats& s) const {
    const double relative_gap = std::abs(s.duality_gap) / std::max(1.0, std::abs(s.dual_objective));
    return relative_gap <= config_.tol_gap && s.max_violation <= config_.tol_violation;
  }

  Solution<Scalar> solve(const std::function<void(const PassStats&)>& on_pass = {}) {
    Solution<Scalar> out;
    const int budget = config_.fixed_passes ? *config_.fixed_passes : config_.max_passes;
    for (int k = 0; k < budget; ++k) {
      out.stats.push_back(run_pass());
      if (on_pass) on_pass(out.stats.back());
      if (!config_.fixed_passes && meets_tolerances(out.stats.back())) {
        out.converged = true;
        break;
      }
    }
    if (config_.fixed_passes && !out.stats.empty()) out.converged = meets_tolerances(out.stats.back());
    out.passes_run = static_cast<int>(out.stats.size());
    out.state = state_;
    return out;
  }

 private:
  template <bool UnitWeights>
  void visit_metric(std::size_t r, int w, typename DualStore<Scalar>::Cursor& cursor, std::uint64_t& count,
                    Scalar& delta_sum) {
    Scalar* x = state_.x.data();
    const Scalar* iwx = UnitWeights ? nullptr : inv_x_weights_.data();
    const Scalar eps = instance_.epsilon();
    const Scalar inv_eps = Scalar(1) / eps;
    const std::array<Scalar, 3> coeffs{1, -1, -1};
    for_each_assigned_triplet(plan_, r, w, [&](Index i, Index j, Index k) {
      const Index pij = column_offset(j) + i, pik = column_offset(k) + i, pjk = column_offset(k) + j;
      Scalar* xij = x + pij;
      Scalar* xik = x + pik;
      Scalar* xjk = x + pjk;
      const std::uint64_t base = 3 * triplet_rank(i, j, k);
      auto visit = [&](std::uint64_t code, Scalar* a, Scalar* b, Scalar* c, Index pa, Index pb, Index pc) {
        std::array<Scalar, 3> iw{1, 1, 1};
        Scalar q = 3;
        if constexpr (!UnitWeights) {
          iw = {iwx[pa], iwx[pb], iwx[pc]};
          q = iw[0] + iw[1] + iw[2];
        }
        const auto out = apply_dykstra<3, Scalar>({a, b, c}, coeffs, iw, Scalar(0), cursor.take(code), eps,
                                                  inv_eps, q);
        cursor.record(code, out.theta_plus);
        delta_sum += out.delta;
      };
      visit(base + 0, xij, xik, xjk, pij, pik, pjk);
      visit(base + 1, xik, xij, xjk, pik, pij, pjk);
      visit(base + 2, xjk, xij, xik, pjk, pij, pik);
      count += 3;
    });
  }

  // Upper then lower constraint for each pair in [lo, hi). Returns false if a
  // non-finite value was seen.
  bool visit_pairs(Index lo, Index hi, std::uint64_t& count) {
    const Scalar eps = instance_.epsilon();
    const Scalar inv_eps = Scalar(1) / eps;
    auto& yu = duals_.pair_upper();
    auto& yl = duals_.pair_lower();
    Scalar delta_sum = 0;
    for (Index p = lo; p < hi; ++p) {
      std::array<Scalar, 2> iw{1, 1};
      if (!instance_.unit_weights()) iw = {inv_x_weights_[p], inv_f_weights_[p]};
      const Scalar q = iw[0] + iw[1];
      const Scalar d = instance_.d()[p];
      Scalar* xp = &state_.x[p];
      Scalar* fp = &state_.f[p];
      auto up = apply_dykstra<2, Scalar>({xp, fp}, {1, -1}, iw, d, yu[p], eps, inv_eps, q);
      yu[p] = up.theta_plus;
      auto low = apply_dykstra<2, Scalar>({xp, fp}, {-1, -1}, iw, -d, yl[p], eps, inv_eps, q);
      yl[p] = low.theta_plus;
      delta_sum += up.delta + low.delta;
    }
    count += static_cast<std::uint64_t>(2 * (hi - lo));
    return std::isfinite(delta_sum);
  }

  Scalar parallel_max_violation() {
    const int p = team_->size();
    std::vector<Scalar> worst(static_cast<std::size_t>(p), 0);
    const Index n = instance_.n();
    team_->run([&](int w) {
      Scalar v = 0;
      for (Index k = 2 + w; k < n; k += p) v = std::max(v, max_metric_violation(state_, k, k + 1));
      worst[w] = v;
    });
    Scalar out = max_pair_violation(instance_, state_);
    for (Scalar v : worst) out = std::max(out, v);
    return out;
  }

  ProblemInstance<Scalar> instance_;
  SolverConfig config_;
  ExecutionPlan plan_;
  PrimalState<Scalar> state_;
  DualStore<Scalar> duals_;
  std::unique_ptr<WorkerTeam> team_;
  VectorX<Scalar> inv_x_weights_;
  VectorX<Scalar> inv_f_weights_;
  int passes_ = 0;
  std::uint64_t total_steps_ = 0;
};

template <typename Scalar>
Solution<Scalar> solve(ProblemInstance<Scalar> instance, const SolverConfig& config,
                       const std::function<void(const PassStats&)>& on_pass = {}) {
  Solver<Scalar> solver(std::move(instance), config);
  return solver.solve(on_pass);
}

}  // namespace metricproj
