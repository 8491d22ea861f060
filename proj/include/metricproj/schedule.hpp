#pragma once

// Conflict-free orderings of the triplets i < j < k.
//
// S(i, k) is the set of triplets with smallest index i and largest index k.
// Sets along an anti-diagonal of the (i, k) grid, S(x + c, z - c), never share
// a pair variable, so their projections can run concurrently. Tiles group
// b x b blocks of the grid; tiles on one block anti-diagonal are independent
// for the same reason. All indices here are 0-based.

#include "metricproj/core.hpp"

#include <algorithm>
#include <compare>
#include <string>
#include <vector>

namespace metricproj {

enum class ScheduleKind { serial, diagonal, tiled };

struct Triplet {
  Index i, j, k;
  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

struct TripletSet {
  Index i, k;
  Index size() const { return k - i - 1; }
  friend bool operator==(const TripletSet&, const TripletSet&) = default;
};

// All S(i, k) with i in [x, x + b - 1], k in [z - b + 1, z], clipped to valid
// (i, k) with k >= i + 2.
struct Tile {
  Index x, z, b;
  friend bool operator==(const Tile&, const Tile&) = default;
};

template <typename Unit>
using Round = std::vector<Unit>;

// The unit at 0-based position r of round q runs on worker (r + 1 + q) mod p.
// In the first round this is the plain "r-th set (1-based) to worker r mod p";
// later rounds rotate the starting worker so short rounds do not always
// land on the same workers.
inline int assigned_worker(std::size_t position, int workers, std::size_t round = 0) {
  return static_cast<int>((position + 1 + round) % static_cast<std::size_t>(workers));
}

// ---------------------------------------------------------------------------
// Serial order

template <typename F>
void for_each_serial_triplet(Index n, F&& f) {
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      for (Index k = j + 1; k < n; ++k) f(i, j, k);
}

inline std::vector<Triplet> serial_order(Index n) {
  if (n < 3) throw DomainError("serial_order: n must be at least 3");
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(constraint_count(n, true) / 3));
  for_each_serial_triplet(n, [&](Index i, Index j, Index k) { out.push_back({i, j, k}); });
  return out;
}

// ---------------------------------------------------------------------------
// Diagonal rounds of S(i, k) sets

inline std::vector<Round<TripletSet>> diagonal_rounds(Index n) {
  if (n < 3) throw DomainError("diagonal_rounds: n must be at least 3");
  std::vector<Round<TripletSet>> rounds;
  auto emit = [&](Index x, Index z) {
    Round<TripletSet> round;
    for (Index c = 0; c <= (z - x - 2) / 2; ++c) round.push_back({x + c, z - c});
    rounds.push_back(std::move(round));
  };
  for (Index z = n - 1; z >= 2; --z) emit(0, z);
  for (Index x = 1; x <= n - 3; ++x) emit(x, n - 1);
  return rounds;
}

// ---------------------------------------------------------------------------
// Tiles

struct TileBounds {
  Index i_lo, i_hi, k_lo, k_hi;  // inclusive
};

inline TileBounds tile_bounds(const Tile& t, Index n) {
  return {std::max<Index>(t.x, 0), std::min(t.x + t.b - 1, n - 3), std::max<Index>(t.z - t.b + 1, 2),
          std::min(t.z, n - 1)};
}

inline bool tile_nonempty(const Tile& t, Index n) {
  const TileBounds r = tile_bounds(t, n);
  return r.i_lo <= r.i_hi && r.k_lo <= r.k_hi && r.k_hi >= r.i_lo + 2;
}

inline std::vector<TripletSet> tile_sets(const Tile& t, Index n) {
  const TileBounds r = tile_bounds(t, n);
  std::vector<TripletSet> out;
  for (Index i = r.i_lo; i <= r.i_hi; ++i)
    for (Index k = r.k_hi; k >= r.k_lo; --k)
      if (k >= i + 2) out.push_back({i, k});
  return out;
}

// Visits every triplet of the tile once. Middle indices are consumed in
// blocks of b over [x + 1, z - 1]; inside each b x b x b cube the loop runs
// k, then j, then i innermost so x_ij and x_ik stream down their columns.
template <typename F>
void for_each_tile_triplet(const Tile& t, Index n, F&& f) {
  const TileBounds r = tile_bounds(t, n);
  const Index j_last = std::min(r.k_hi - 1, t.z - 1);
  for (Index jb = t.x + 1; jb <= j_last; jb += t.b) {
    const Index je = std::min(jb + t.b - 1, j_last);
    for (Index k = r.k_lo; k <= r.k_hi; ++k) {
      const Index j_hi = std::min(je, k - 1);
      for (Index j = std::max(jb, r.i_lo + 1); j <= j_hi; ++j) {
        const Index i_hi = std::min(r.i_hi, j - 1);
        for (Index i = r.i_lo; i <= i_hi; ++i) f(i, j, k);
      }
    }
  }
}

inline std::vector<Triplet> tile_triplets(const Tile& t, Index n) {
  std::vector<Triplet> out;
  for_each_tile_triplet(t, n, [&](Index i, Index j, Index k) { out.push_back({i, j, k}); });
  return out;
}

inline Tile as_tile(const TripletSet& s) { return {s.i, s.k, 1}; }

// Block anti-diagonals of the tile grid. Tile (a, c) has x = a b and
// z = n - 1 - c b. The first sweep walks the block diagonals c - a = m for
// m = 0, 1, ...; the second walks a - c = m for m = 1, 2, .... With b = 1 this
// is exactly diagonal_rounds(n).
inline std::vector<Round<Tile>> tiled_rounds(Index n, Index b) {
  if (n < 3) throw DomainError("tiled_rounds: n must be at least 3");
  if (b < 1) throw DomainError("tiled_rounds: tile size must be at least 1");
  auto tile = [&](Index a, Index c) { return Tile{a * b, n - 1 - c * b, b}; };
  std::vector<Round<Tile>> rounds;
  auto emit = [&](Index a0, Index c0) {
    Round<Tile> round;
    for (Index t = 0; tile_nonempty(tile(a0 + t, c0 + t), n); ++t) round.push_back(tile(a0 + t, c0 + t));
    rounds.push_back(std::move(round));
  };
  for (Index m = 0; tile_nonempty(tile(0, m), n); ++m) emit(0, m);
  for (Index m = 1; tile_nonempty(tile(m, 0), n); ++m) emit(m, 0);
  return rounds;
}

// ---------------------------------------------------------------------------
// Worker plans

// Static assignment of work to workers. For each round, units[round][w] lists
// the tiles worker w processes, in order. The serial kind has one round whose
// only work is the lexicographic enumeration, on worker 0.
struct ExecutionPlan {
  Index n = 0;
  Index tile_size = 1;
  int workers = 1;
  ScheduleKind kind = ScheduleKind::serial;
  std::vector<Round<Tile>> rounds;
  std::vector<std::vector<std::vector<Tile>>> units;

  std::size_t round_count() const { return kind == ScheduleKind::serial ? 1 : rounds.size(); }
};

inline ExecutionPlan worker_plan(const std::vector<Round<Tile>>& rounds, Index n, Index tile_size, int workers,
                                 ScheduleKind kind) {
  if (workers < 1) throw DomainError("worker_plan: need at least one worker");
  ExecutionPlan plan;
  plan.n = n;
  plan.tile_size = tile_size;
  plan.workers = workers;
  plan.kind = kind;
  plan.rounds = rounds;
  plan.units.resize(rounds.size(), std::vector<std::vector<Tile>>(static_cast<std::size_t>(workers)));
  for (std::size_t r = 0; r < rounds.size(); ++r)
    for (std::size_t pos = 0; pos < rounds[r].size(); ++pos)
      plan.units[r][assigned_worker(pos, workers, r)].push_back(rounds[r][pos]);
  return plan;
}

inline ExecutionPlan make_plan(Index n, ScheduleKind kind, Index tile_size, int workers) {
  if (n < 3) throw DomainError("make_plan: n must be at least 3");
  if (tile_size < 1) throw DomainError("make_plan: tile size must be at least 1");
  if (workers < 1) throw DomainError("make_plan: need at least one worker");
  switch (kind) {
    case ScheduleKind::serial: {
      ExecutionPlan plan;
      plan.n = n;
      plan.workers = workers;
      plan.kind = ScheduleKind::serial;
      return plan;
    }
    case ScheduleKind::diagonal:
      return worker_plan(tiled_rounds(n, 1), n, 1, workers, kind);
    case ScheduleKind::tiled:
      break;
  }
  return worker_plan(tiled_rounds(n, tile_size), n, tile_size, workers, kind);
}

// Triplets worker `w` visits in round `r`, in order.
template <typename F>
void for_each_assigned_triplet(const ExecutionPlan& plan, std::size_t r, int w, F&& f) {
  if (plan.kind == ScheduleKind::serial) {
    if (r == 0 && w == 0) for_each_serial_triplet(plan.n, f);
    return;
  }
  for (const Tile& t : plan.units[r][w]) for_each_tile_triplet(t, plan.n, f);
}

// Full metric constraint visit list of one worker for a pass.
inline std::vector<ConstraintKey> visit_order(const ExecutionPlan& plan, int w) {
  std::vector<ConstraintKey> out;
  for (std::size_t r = 0; r < plan.round_count(); ++r)
    for_each_assigned_triplet(plan, r, w, [&](Index i, Index j, Index k) {
      out.push_back({ConstraintKind::metric_ij, i, j, k});
      out.push_back({ConstraintKind::metric_ik, i, j, k});
      out.push_back({ConstraintKind::metric_jk, i, j, k});
    });
  return out;
}

// ---------------------------------------------------------------------------
// Verification

// Every triplet appears exactly once across all rounds. Returns an empty
// string on success, otherwise a description of the first problem.
inline std::string check_partition(const std::vector<Round<Tile>>& rounds, Index n) {
  std::vector<unsigned char> seen(static_cast<std::size_t>(constraint_count(n, true) / 3), 0);
  std::string problem;
  for (std::size_t r = 0; r < rounds.size() && problem.empty(); ++r)
    for (const Tile& t : rounds[r])
      for_each_tile_triplet(t, n, [&](Index i, Index j, Index k) {
        if (!(0 <= i && i < j && j < k && k < n)) {
          if (problem.empty()) problem = "round " + std::to_string(r + 1) + ": invalid triplet";
          return;
        }
        if (seen[triplet_rank(i, j, k)]++ && problem.empty())
          problem = "round " + std::to_string(r + 1) + ": triplet (" + std::to_string(i + 1) + "," +
                    std::to_string(j + 1) + "," + std::to_string(k + 1) + ") visited twice";
      });
  if (problem.empty())
    for (std::size_t t = 0; t < seen.size(); ++t)
      if (!seen[t]) return "a triplet is never visited";
  return problem;
}

// No pair variable is touched by two different units of the same round, which
// is equivalent to no two triplets from different units sharing two indices.
inline std::string check_independence(const std::vector<Round<Tile>>& rounds, Index n) {
  std::vector<std::size_t> owner(static_cast<std::size_t>(pair_count(n)));
  std::vector<std::size_t> stamp(owner.size(), 0);
  std::size_t epoch = 0;
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    ++epoch;
    for (std::size_t u = 0; u < rounds[r].size(); ++u) {
      bool clash = false;
      for_each_tile_triplet(rounds[r][u], n, [&](Index i, Index j, Index k) {
        for (Index p : {pair_index(i, j), pair_index(i, k), pair_index(j, k)}) {
          if (stamp[p] == epoch && owner[p] != u) clash = true;
          stamp[p] = epoch;
          owner[p] = u;
        }
      });
      if (clash) return "round " + std::to_string(r + 1) + ": unit " + std::to_string(u + 1) + " conflicts";
    }
  }
  return {};
}

}  // namespace metricproj
