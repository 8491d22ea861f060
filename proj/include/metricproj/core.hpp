#pragma once

// Domain types for the regularized metric-constrained LP
//
//   minimize    sum_{i<j} w_ij f_ij + (eps/2) v^T W v
//   subject to  x_ij <= x_ik + x_jk            for all triples
//               x_ij - f_ij <= d_ij,  -x_ij - f_ij <= -d_ij
//
// where v = [x; f] and W is diagonal (identity unless set otherwise).
//
// Pairs {i, j} are packed column-wise with the larger index as the column:
// offset(i, j) = j (j - 1) / 2 + i for i < j. Columns of X are contiguous,
// which is what the tiled triplet iteration relies on. Indices are 0-based.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace metricproj {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

constexpr Index pair_count(Index n) { return n * (n - 1) / 2; }

// Packed offset of the unordered pair {i, j}; requires i != j.
constexpr Index pair_index(Index i, Index j) {
  if (i > j) std::swap(i, j);
  return j * (j - 1) / 2 + i;
}

// Start of column k in the packed layout (entries (0..k-1, k)).
constexpr Index column_offset(Index k) { return k * (k - 1) / 2; }

// Inverse of pair_index.
inline std::pair<Index, Index> pair_from_index(Index p) {
  auto j = static_cast<Index>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(p))) / 2.0);
  while (column_offset(j) > p) --j;
  while (column_offset(j + 1) <= p) ++j;
  return {p - column_offset(j), j};
}

// Number of metric (and, unless metric_only, pair) constraints for n objects.
inline std::uint64_t constraint_count(Index n, bool metric_only = false) {
  if (n < 3) throw DomainError("constraint_count: n must be at least 3");
  const auto m = static_cast<std::uint64_t>(n);
  const std::uint64_t triples = m * (m - 1) * (m - 2) / 6;
  const std::uint64_t pairs = m * (m - 1) / 2;
  return metric_only ? 3 * triples : 3 * triples + 2 * pairs;
}

// ---------------------------------------------------------------------------
// Problem instance

template <typename Scalar = double>
class ProblemInstance {
 public:
  using Vector = VectorX<Scalar>;

  ProblemInstance() = default;

  // d and w are packed pair vectors of length pair_count(n).
  ProblemInstance(Index n, Vector d, Vector w, Scalar epsilon)
      : n_(n), d_(std::move(d)), w_(std::move(w)), epsilon_(epsilon) {
    validate();
  }

  // Builds from dense symmetric n x n matrices; only the strict upper triangle
  // is read after the symmetry check.
  static ProblemInstance from_dense(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& dissimilarity,
                                    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& weights,
                                    Scalar epsilon) {
    const Index n = dissimilarity.rows();
    if (dissimilarity.cols() != n || weights.rows() != n || weights.cols() != n)
      throw DomainError("ProblemInstance: matrices must be square and of equal size");
    if (!dissimilarity.isApprox(dissimilarity.transpose(), Scalar(0)) ||
        !weights.isApprox(weights.transpose(), Scalar(0)))
      throw DomainError("ProblemInstance: D and W must be symmetric");
    Vector d(pair_count(n)), w(pair_count(n));
    for (Index j = 1; j < n; ++j)
      for (Index i = 0; i < j; ++i) {
        d[pair_index(i, j)] = dissimilarity(i, j);
        w[pair_index(i, j)] = weights(i, j);
      }
    return ProblemInstance(n, std::move(d), std::move(w), epsilon);
  }

  Index n() const { return n_; }
  Index pairs() const { return pair_count(n_); }
  Scalar epsilon() const { return epsilon_; }
  void set_epsilon(Scalar epsilon) {
    if (!(epsilon > 0)) throw DomainError("ProblemInstance: epsilon must be positive");
    epsilon_ = epsilon;
  }

  const Vector& d() const { return d_; }
  const Vector& w() const { return w_; }
  Scalar d(Index i, Index j) const { return d_[pair_index(i, j)]; }
  Scalar w(Index i, Index j) const { return w_[pair_index(i, j)]; }

  // Diagonal of W on the x- and f-blocks. Empty vectors mean identity.
  void set_variable_weights(Vector x_weights, Vector f_weights) {
    if (x_weights.size() != pairs() || f_weights.size() != pairs())
      throw DomainError("ProblemInstance: variable weight vectors must have one entry per pair");
    if ((x_weights.array() <= 0).any() || (f_weights.array() <= 0).any())
      throw DomainError("ProblemInstance: W must be positive definite");
    x_weights_ = std::move(x_weights);
    f_weights_ = std::move(f_weights);
  }
  bool unit_weights() const { return x_weights_.size() == 0; }
  Scalar x_weight(Index p) const { return unit_weights() ? Scalar(1) : x_weights_[p]; }
  Scalar f_weight(Index p) const { return unit_weights() ? Scalar(1) : f_weights_[p]; }
  const Vector& x_weights() const { return x_weights_; }
  const Vector& f_weights() const { return f_weights_; }

  void validate() const {
    if (n_ < 3) throw DomainError("ProblemInstance: n must be at least 3");
    if (d_.size() != pairs() || w_.size() != pairs())
      throw DomainError("ProblemInstance: expected " + std::to_string(pairs()) + " pair entries");
    if (!(epsilon_ > 0)) throw DomainError("ProblemInstance: epsilon must be positive");
    if (!d_.allFinite() || (d_.array() < 0).any())
      throw DomainError("ProblemInstance: dissimilarities must be finite and nonnegative");
    if (!w_.allFinite() || (w_.array() <= 0).any())
      throw DomainError("ProblemInstance: weights must be finite and positive");
  }

 private:
  Index n_ = 0;
  Vector d_;
  Vector w_;
  Scalar epsilon_ = Scalar(0.2);
  Vector x_weights_;
  Vector f_weights_;
};

// ---------------------------------------------------------------------------
// Primal state

template <typename Scalar = double>
struct PrimalState {
  using Vector = VectorX<Scalar>;

  PrimalState() = default;
  explicit PrimalState(Index n) : n(n), x(Vector::Zero(pair_count(n))), f(Vector::Zero(pair_count(n))) {}

  Scalar& x_at(Index i, Index j) { return x[pair_index(i, j)]; }
  Scalar x_at(Index i, Index j) const { return x[pair_index(i, j)]; }
  Scalar& f_at(Index i, Index j) { return f[pair_index(i, j)]; }
  Scalar f_at(Index i, Index j) const { return f[pair_index(i, j)]; }

  // v = [x; f]
  Vector stacked() const {
    Vector v(2 * x.size());
    v << x, f;
    return v;
  }

  bool all_finite() const { return x.allFinite() && f.allFinite(); }

  Index n = 0;
  Vector x;
  Vector f;
};

// ---------------------------------------------------------------------------
// Constraint keys

enum class ConstraintKind : std::uint8_t {
  metric_ij = 0,  // x_ij <= x_ik + x_jk
  metric_ik = 1,  // x_ik <= x_ij + x_jk
  metric_jk = 2,  // x_jk <= x_ij + x_ik
  pair_upper = 3, // x_ij - f_ij <= d_ij
  pair_lower = 4, // -x_ij - f_ij <= -d_ij
};

constexpr bool is_metric(ConstraintKind kind) { return static_cast<int>(kind) < 3; }

// Rank of i < j < k in the combinatorial number system.
constexpr std::uint64_t triplet_rank(Index i, Index j, Index k) {
  const auto ku = static_cast<std::uint64_t>(k);
  const auto ju = static_cast<std::uint64_t>(j);
  return ku * (ku - 1) * (ku - 2) / 6 + ju * (ju - 1) / 2 + static_cast<std::uint64_t>(i);
}

struct ConstraintKey {
  ConstraintKind kind = ConstraintKind::metric_ij;
  Index i = 0;
  Index j = 0;
  Index k = -1;  // unused for pair kinds

  static ConstraintKey metric(ConstraintKind kind, Index i, Index j, Index k) {
    if (!is_metric(kind)) throw DomainError("ConstraintKey: not a metric kind");
    if (!(0 <= i && i < j && j < k)) throw DomainError("ConstraintKey: metric indices must satisfy i < j < k");
    return {kind, i, j, k};
  }
  static ConstraintKey pair(ConstraintKind kind, Index i, Index j) {
    if (is_metric(kind)) throw DomainError("ConstraintKey: not a pair kind");
    if (!(0 <= i && i < j)) throw DomainError("ConstraintKey: pair indices must satisfy i < j");
    return {kind, i, j, -1};
  }

  // Unique code among metric keys: 3 * rank(i, j, k) + kind.
  std::uint64_t metric_code() const { return 3 * triplet_rank(i, j, k) + static_cast<std::uint64_t>(kind); }

  static ConstraintKey from_metric_code(std::uint64_t code) {
    const auto kind = static_cast<ConstraintKind>(code % 3);
    std::uint64_t rank = code / 3;
    Index k = 2;
    while (triplet_rank(0, 1, k + 1) <= rank) ++k;
    rank -= triplet_rank(0, 1, k);
    Index j = 1;
    while (static_cast<std::uint64_t>((j + 1) * j / 2) <= rank) ++j;
    rank -= static_cast<std::uint64_t>(j * (j - 1) / 2);
    return {kind, static_cast<Index>(rank), j, k};
  }

  friend bool operator==(const ConstraintKey&, const ConstraintKey&) = default;
};

// ---------------------------------------------------------------------------
// Dual storage
//
// Metric duals live in one sparse array per worker holding (code, y) tuples in
// that worker's visit order; only y > 0 is stored. Each pass reads the previous
// pass's array through a cursor and appends to a fresh one; the two are
// swapped when the pass ends. Pair duals are dense.

template <typename Scalar = double>
struct DualEntry {
  std::uint64_t code;
  Scalar y;
};

template <typename Scalar = double>
class DualStore {
 public:
  using Entry = DualEntry<Scalar>;

  // Per-worker view used inside a pass.
  class Cursor {
   public:
    Cursor(const std::vector<Entry>& read, std::vector<Entry>& write)
        : it_(read.data()), end_(read.data() + read.size()), write_(&write) {}

    // Dual stored for `code` last pass, or 0. Codes must be requested in the
    // same order they were recorded.
    Scalar take(std::uint64_t code) {
      if (it_ != end_ && it_->code == code) return (it_++)->y;
      return Scalar(0);
    }
    void record(std::uint64_t code, Scalar y) {
      if (y > 0) write_->push_back({code, y});
    }
    bool exhausted() const { return it_ == end_; }

   private:
    const Entry* it_;
    const Entry* end_;
    std::vector<Entry>* write_;
  };

  DualStore() = default;
  DualStore(Index n, int workers)
      : n_(n),
        read_(static_cast<std::size_t>(workers)),
        write_(static_cast<std::size_t>(workers)),
        pair_upper_(VectorX<Scalar>::Zero(pair_count(n))),
        pair_lower_(VectorX<Scalar>::Zero(pair_count(n))) {
    if (workers < 1) throw DomainError("DualStore: need at least one worker");
  }

  Index n() const { return n_; }
  int workers() const { return static_cast<int>(read_.size()); }

  void begin_pass() {
    for (std::size_t w = 0; w < write_.size(); ++w) {
      write_[w].clear();
      write_[w].reserve(read_[w].size());
    }
  }
  Cursor cursor(int worker) { return Cursor(read_[worker], write_[worker]); }
  void end_pass() { std::swap(read_, write_); }

  // Latest stored metric duals of one worker, in visit order.
  const std::vector<Entry>& metric_duals(int worker) const { return read_[worker]; }
  std::size_t metric_nonzeros() const {
    std::size_t total = 0;
    for (const auto& a : read_) total += a.size();
    return total;
  }

  template <typename F>
  void for_each_metric(F&& f) const {
    for (const auto& a : read_)
      for (const auto& e : a) f(ConstraintKey::from_metric_code(e.code), e.y);
  }

  VectorX<Scalar>& pair_upper() { return pair_upper_; }
  VectorX<Scalar>& pair_lower() { return pair_lower_; }
  const VectorX<Scalar>& pair_upper() const { return pair_upper_; }
  const VectorX<Scalar>& pair_lower() const { return pair_lower_; }

 private:
  Index n_ = 0;
  std::vector<std::vector<Entry>> read_;
  std::vector<std::vector<Entry>> write_;
  VectorX<Scalar> pair_upper_;
  VectorX<Scalar> pair_lower_;
};

// ---------------------------------------------------------------------------
// Convergence metrics

struct PassStats {
  Index pass_index = 0;
  double primal_objective = 0;
  double dual_objective = 0;
  double duality_gap = 0;
  double max_violation = 0;
  double wall_time = 0;
  std::uint64_t steps = 0;  // dykstra steps performed in this pass
};

template <typename Scalar>
void check_dimensions(const ProblemInstance<Scalar>& instance, const PrimalState<Scalar>& state) {
  if (state.n != instance.n() || state.x.size() != instance.pairs() || state.f.size() != instance.pairs())
    throw DomainError("state dimensions do not match instance (n = " + std::to_string(instance.n()) + ")");
}

// (1/2) v^T W v
template <typename Scalar>
Scalar half_weighted_norm(const ProblemInstance<Scalar>& instance, const PrimalState<Scalar>& state) {
  if (instance.unit_weights()) return Scalar(0.5) * (state.x.squaredNorm() + state.f.squaredNorm());
  return Scalar(0.5) * ((instance.x_weights().array() * state.x.array().square()).sum() +
                        (instance.f_weights().array() * state.f.array().square()).sum());
}

template <typename Scalar>
Scalar primal_objective(const ProblemInstance<Scalar>& instance, const PrimalState<Scalar>& state) {
  check_dimensions(instance, state);
  return instance.w().dot(state.f) + instance.epsilon() * half_weighted_norm(instance, state);
}

// b^T y; metric rows have b = 0.
template <typename Scalar>
Scalar dual_rhs_product(const ProblemInstance<Scalar>& instance, const DualStore<Scalar>& duals) {
  return instance.d().dot(duals.pair_upper() - duals.pair_lower());
}

// A^T y accumulated from the stored duals, as a stacked [x; f] vector.
template <typename Scalar>
VectorX<Scalar> transpose_product(const ProblemInstance<Scalar>& instance, const DualStore<Scalar>& duals) {
  const Index m = instance.pairs();
  VectorX<Scalar> g = VectorX<Scalar>::Zero(2 * m);
  duals.for_each_metric([&](const ConstraintKey& key, Scalar y) {
    const Index ij = pair_index(key.i, key.j), ik = pair_index(key.i, key.k), jk = pair_index(key.j, key.k);
    switch (key.kind) {
      case ConstraintKind::metric_ij: g[ij] += y; g[ik] -= y; g[jk] -= y; break;
      case ConstraintKind::metric_ik: g[ik] += y; g[ij] -= y; g[jk] -= y; break;
      default: g[jk] += y; g[ij] -= y; g[ik] -= y; break;
    }
  });
  g.head(m) += duals.pair_upper() - duals.pair_lower();
  g.tail(m) -= duals.pair_upper() + duals.pair_lower();
  return g;
}

// v = -(1/eps) W^{-1} (c + A^T y), the primal point the duals imply.
template <typename Scalar>
PrimalState<Scalar> implied_state(const ProblemInstance<Scalar>& instance, const DualStore<Scalar>& duals) {
  const Index m = instance.pairs();
  VectorX<Scalar> u = transpose_product(instance, duals);
  u.tail(m) += instance.w();
  PrimalState<Scalar> state(instance.n());
  const Scalar s = -Scalar(1) / instance.epsilon();
  if (instance.unit_weights()) {
    state.x = s * u.head(m);
    state.f = s * u.tail(m);
  } else {
    state.x = s * (u.head(m).array() / instance.x_weights().array()).matrix();
    state.f = s * (u.tail(m).array() / instance.f_weights().array()).matrix();
  }
  return state;
}

// Lagrangian dual -b^T y - (1/(2 eps)) (c + A^T y)^T W^{-1} (c + A^T y),
// evaluated from the stored duals alone.
template <typename Scalar>
Scalar dual_objective(const ProblemInstance<Scalar>& instance, const DualStore<Scalar>& duals) {
  const PrimalState<Scalar> v = implied_state(instance, duals);
  return -dual_rhs_product(instance, duals) - instance.epsilon() * half_weighted_norm(instance, v);
}

// Same value, using the solver's state in place of A^T y (valid while
// v = -(1/eps) W^{-1} (c + A^T y) holds, which Dykstra maintains).
template <typename Scalar>
Scalar dual_objective(const ProblemInstance<Scalar>& instance, const PrimalState<Scalar>& state,
                      const DualStore<Scalar>& duals) {
  check_dimensions(instance, state);
  return -dual_rhs_product(instance, duals) - instance.epsilon() * half_weighted_norm(instance, state);
}

template <typename Scalar>
Scalar max_pair_violation(const ProblemInstance<Scalar>& instance, const PrimalState<Scalar>& state) {
  const auto diff = (state.x - instance.d()).array().abs() - state.f.array();
  return std::max(Scalar(0), diff.size() ? diff.maxCoeff() : Scalar(0));
}

// Max triangle violation over triplets whose largest index lies in [k_begin, k_end).
template <typename Scalar>
Scalar max_metric_violation(const PrimalState<Scalar>& state, Index k_begin, Index k_end) {
  const Scalar* x = state.x.data();
  Scalar worst = 0;
  for (Index k = std::max<Index>(k_begin, 2); k < k_end; ++k) {
    const Scalar* col_k = x + column_offset(k);
    for (Index j = 1; j < k; ++j) {
      const Scalar* col_j = x + column_offset(j);
      const Scalar xjk = col_k[j];
      for (Index i = 0; i < j; ++i) {
        const Scalar xij = col_j[i], xik = col_k[i];
        worst = std::max({worst, xij - xik - xjk, xik - xij - xjk, xjk - xij - xik});
      }
    }
  }
  return worst;
}

// max over every constraint of max(a^T v - b, 0).
template <typename Scalar>
Scalar max_violation(const ProblemInstance<Scalar>& instance, const PrimalState<Scalar>& state) {
  check_dimensions(instance, state);
  return std::max(max_metric_violation(state, 0, instance.n()), max_pair_violation(instance, state));
}

// max over stored duals of y * max(b - a^T v, 0).
template <typename Scalar>
Scalar complementarity_residual(const ProblemInstance<Scalar>& instance, const PrimalState<Scalar>& state,
                                const DualStore<Scalar>& duals) {
  check_dimensions(instance, state);
  Scalar worst = 0;
  duals.for_each_metric([&](const ConstraintKey& key, Scalar y) {
    const Scalar xij = state.x_at(key.i, key.j), xik = state.x_at(key.i, key.k), xjk = state.x_at(key.j, key.k);
    Scalar slack = 0;
    switch (key.kind) {
      case ConstraintKind::metric_ij: slack = xik + xjk - xij; break;
      case ConstraintKind::metric_ik: slack = xij + xjk - xik; break;
      default: slack = xij + xik - xjk; break;
    }
    worst = std::max(worst, y * std::max(slack, Scalar(0)));
  });
  for (Index p = 0; p < instance.pairs(); ++p) {
    const Scalar x = state.x[p], f = state.f[p], d = instance.d()[p];
    worst = std::max(worst, duals.pair_upper()[p] * std::max(d - (x - f), Scalar(0)));
    worst = std::max(worst, duals.pair_lower()[p] * std::max(-d - (-x - f), Scalar(0)));
  }
  return worst;
}

}  // namespace metricproj
