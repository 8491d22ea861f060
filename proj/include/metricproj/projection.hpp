#pragma once

// Dykstra step kernels. A visit to constraint row a (with right-hand side b)
// holding dual y does
//
//   correction  v += y (1/eps) W^{-1} a
//   projection  v -= theta (1/eps) W^{-1} a,  theta = eps max(a^T v - b, 0) / (a^T W^{-1} a)
//   dual update y  = theta
//
// Rows have at most three nonzeros, so both updates are applied in registers
// and written back once.

#include "metricproj/core.hpp"

#include <array>
#include <cmath>

namespace metricproj {

// Duals below this are dropped (and not applied) so dust never enters the
// sparse dual arrays.
inline constexpr double kDualFloor = 1e-15;

template <typename Scalar = double>
struct StepOutcome {
  Scalar theta_plus = 0;
  bool changed = false;
  Scalar delta = 0;  // a^T v - b after the correction
};

template <typename Scalar = double>
struct SparseRow {
  std::array<Index, 3> positions{};  // into v = [x; f]
  std::array<Scalar, 3> coefficients{};
  int nonzeros = 0;
  Scalar rhs = 0;
};

// Core update on N variables. Every code path (generic step, solver fast
// path) goes through here so trajectories agree bit for bit.
template <int N, typename Scalar>
inline StepOutcome<Scalar> apply_dykstra(const std::array<Scalar*, N>& vars, const std::array<Scalar, N>& coeffs,
                                         const std::array<Scalar, N>& inv_weights, Scalar rhs, Scalar y_old,
                                         Scalar epsilon, Scalar inv_epsilon, Scalar row_norm) {
  std::array<Scalar, N> v;
  for (int m = 0; m < N; ++m) v[m] = *vars[m];
  if (y_old != Scalar(0)) {
    const Scalar t = y_old * inv_epsilon;
    for (int m = 0; m < N; ++m) v[m] += t * (coeffs[m] * inv_weights[m]);
  }
  Scalar delta = -rhs;
  for (int m = 0; m < N; ++m) delta += coeffs[m] * v[m];
  Scalar theta = delta > Scalar(0) ? epsilon * delta / row_norm : Scalar(0);
  if (theta < Scalar(kDualFloor)) theta = Scalar(0);
  if (theta != Scalar(0)) {
    const Scalar s = theta * inv_epsilon;
    for (int m = 0; m < N; ++m) v[m] -= s * (coeffs[m] * inv_weights[m]);
  }
  const bool changed = y_old != Scalar(0) || theta != Scalar(0);
  if (changed)
    for (int m = 0; m < N; ++m) *vars[m] = v[m];
  return {theta, changed, delta};
}

// Metric row for `key`: +1 on the constrained side, -1 on the other two, b = 0.
template <typename Scalar = double>
SparseRow<Scalar> metric_row(const ConstraintKey& key) {
  if (!is_metric(key.kind)) throw DomainError("metric_row: key is not a metric constraint");
  const Index ij = pair_index(key.i, key.j), ik = pair_index(key.i, key.k), jk = pair_index(key.j, key.k);
  SparseRow<Scalar> row;
  row.nonzeros = 3;
  row.coefficients = {1, -1, -1};
  switch (key.kind) {
    case ConstraintKind::metric_ij: row.positions = {ij, ik, jk}; break;
    case ConstraintKind::metric_ik: row.positions = {ik, ij, jk}; break;
    default: row.positions = {jk, ij, ik}; break;
  }
  return row;
}

// Pair rows: upper  x_ij - f_ij <= d_ij,  lower  -x_ij - f_ij <= -d_ij.
template <typename Scalar>
SparseRow<Scalar> pair_row(const ConstraintKey& key, const ProblemInstance<Scalar>& instance) {
  if (is_metric(key.kind)) throw DomainError("pair_row: key is not a pair constraint");
  const Index p = pair_index(key.i, key.j);
  SparseRow<Scalar> row;
  row.nonzeros = 2;
  row.positions = {p, instance.pairs() + p, 0};
  const Scalar d = instance.d()[p];
  if (key.kind == ConstraintKind::pair_upper) {
    row.coefficients = {1, -1, 0};
    row.rhs = d;
  } else {
    row.coefficients = {-1, -1, 0};
    row.rhs = -d;
  }
  return row;
}

template <typename Scalar>
SparseRow<Scalar> constraint_row(const ConstraintKey& key, const ProblemInstance<Scalar>& instance) {
  return is_metric(key.kind) ? metric_row<Scalar>(key) : pair_row(key, instance);
}

namespace detail {

template <typename Scalar>
Scalar inverse_weight(const ProblemInstance<Scalar>& instance, Index position) {
  const Index m = instance.pairs();
  return position < m ? Scalar(1) / instance.x_weight(position) : Scalar(1) / instance.f_weight(position - m);
}

}  // namespace detail

// One Dykstra visit to `key`. Touches only the variables of the key's row.
template <typename Scalar>
StepOutcome<Scalar> dykstra_step(PrimalState<Scalar>& state, const ConstraintKey& key, Scalar y_old,
                                 const ProblemInstance<Scalar>& instance) {
  const SparseRow<Scalar> row = constraint_row(key, instance);
  const Index m = instance.pairs();
  auto slot = [&](Index position) { return position < m ? &state.x[position] : &state.f[position - m]; };
  const Scalar eps = instance.epsilon();
  const Scalar inv_eps = Scalar(1) / eps;
  if (row.nonzeros == 3) {
    std::array<Scalar, 3> iw{};
    Scalar q = 0;
    for (int t = 0; t < 3; ++t) {
      iw[t] = instance.unit_weights() ? Scalar(1) : detail::inverse_weight(instance, row.positions[t]);
      q += row.coefficients[t] * row.coefficients[t] * iw[t];
    }
    return apply_dykstra<3, Scalar>({slot(row.positions[0]), slot(row.positions[1]), slot(row.positions[2])},
                                    row.coefficients, iw, row.rhs, y_old, eps, inv_eps, q);
  }
  std::array<Scalar, 2> iw{};
  Scalar q = 0;
  for (int t = 0; t < 2; ++t) {
    iw[t] = instance.unit_weights() ? Scalar(1) : detail::inverse_weight(instance, row.positions[t]);
    q += row.coefficients[t] * row.coefficients[t] * iw[t];
  }
  return apply_dykstra<2, Scalar>({slot(row.positions[0]), slot(row.positions[1])},
                                  {row.coefficients[0], row.coefficients[1]}, iw, row.rhs, y_old, eps, inv_eps, q);
}

}  // namespace metricproj
