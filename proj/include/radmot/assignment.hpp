#pragma once

// Optimal 2D assignment (shortest augmenting path Hungarian) and Murty's
// k-best enumeration.
//
// Cost matrices are rows x cols with rows <= cols. Every row must be assigned
// to a distinct column; +infinity marks a forbidden pair. Among equal-cost
// optima the lexicographically smallest rowToCol is returned.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "radmot/core.hpp"

namespace radmot {

using CostMatrix = Eigen::MatrixXd;

inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

struct Assignment {
  std::vector<int> rowToCol;
  double total = 0.0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

namespace detail {

struct HungarianResult {
  bool feasible = false;
  std::vector<int> rowToCol;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials (<= 0, zero on unassigned columns)
};

inline HungarianResult hungarian(const CostMatrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  HungarianResult res;
  if (n == 0) {
    res.feasible = true;
    res.v.assign(static_cast<std::size_t>(m), 0.0);
    return res;
  }
  if (n > m) return res;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 < 0 || !std::isfinite(delta)) return res;
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  res.feasible = true;
  res.rowToCol.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) res.rowToCol[p[j] - 1] = j - 1;
  res.u.assign(u.begin() + 1, u.end());
  res.v.assign(v.begin() + 1, v.end());
  return res;
}

inline double assignmentTotal(const CostMatrix& cost, const std::vector<int>& rowToCol) {
  double total = 0.0;
  for (std::size_t i = 0; i < rowToCol.size(); ++i)
    total += cost(static_cast<Eigen::Index>(i), rowToCol[i]);
  return total;
}

inline double costScale(const CostMatrix& cost) {
  double s = 1.0;
  for (Eigen::Index i = 0; i < cost.size(); ++i)
    if (std::isfinite(cost.data()[i])) s = std::max(s, std::abs(cost.data()[i]));
  return s;
}

// Rows [first, n) restricted to columns not in `taken`.
inline std::optional<std::vector<int>> solveSuffix(const CostMatrix& cost, int first,
                                                   const std::vector<char>& taken) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> cols;
  for (int j = 0; j < cost.cols(); ++j)
    if (!taken[static_cast<std::size_t>(j)]) cols.push_back(j);
  CostMatrix sub(n - first, static_cast<Eigen::Index>(cols.size()));
  for (int i = first; i < n; ++i)
    for (std::size_t c = 0; c < cols.size(); ++c)
      sub(i - first, static_cast<Eigen::Index>(c)) = cost(i, cols[c]);
  auto r = hungarian(sub);
  if (!r.feasible) return std::nullopt;
  std::vector<int> out;
  out.reserve(r.rowToCol.size());
  for (int c : r.rowToCol) out.push_back(cols[static_cast<std::size_t>(c)]);
  return out;
}

// Moves an optimal assignment to the lexicographically smallest optimal one.
// Only columns with zero reduced cost can appear in any optimum, so the
// expensive suffix re-solve is attempted only for those.
inline std::vector<int> lexicographicOptimum(const CostMatrix& cost, const HungarianResult& opt) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  std::vector<int> best = opt.rowToCol;
  const double optTotal = assignmentTotal(cost, best);
  const double tol = 1e-9 * costScale(cost) * std::max(1, n);

  std::vector<char> taken(static_cast<std::size_t>(m), 0);
  double prefix = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < best[i]; ++c) {
      if (taken[c] || !std::isfinite(cost(i, c))) continue;
      const double reduced = cost(i, c) - opt.u[i] - opt.v[c];
      if (reduced > tol) continue;
      taken[c] = 1;
      auto rest = solveSuffix(cost, i + 1, taken);
      taken[c] = 0;
      if (!rest) continue;
      double total = prefix + cost(i, c);
      for (int k = i + 1; k < n; ++k) total += cost(k, (*rest)[k - i - 1]);
      if (total <= optTotal + tol) {
        best[i] = c;
        std::copy(rest->begin(), rest->end(), best.begin() + i + 1);
        break;
      }
    }
    taken[best[i]] = 1;
    prefix += cost(i, best[i]);
  }
  return best;
}

inline void checkCosts(const CostMatrix& cost) {
  for (Eigen::Index i = 0; i < cost.size(); ++i) {
    const double c = cost.data()[i];
    if (std::isnan(c) || c == -std::numeric_limits<double>::infinity())
      throw Error(ErrorCode::InvalidArgument, "cost matrix entries must be finite or +inf");
  }
}

inline std::optional<Assignment> solveLexicographic(const CostMatrix& cost) {
  auto r = hungarian(cost);
  if (!r.feasible) return std::nullopt;
  Assignment a;
  a.rowToCol = cost.rows() > 0 ? lexicographicOptimum(cost, r) : std::vector<int>{};
  a.total = assignmentTotal(cost, a.rowToCol);
  return a;
}

}  // namespace detail

/// Minimum-cost complete assignment of rows to distinct columns.
/// Throws Error(Infeasible) when no assignment with finite cost exists.
inline Assignment solveAssignment(const CostMatrix& costs) {
  detail::checkCosts(costs);
  auto a = detail::solveLexicographic(costs);
  if (!a) throw Error(ErrorCode::Infeasible, "no complete assignment with finite cost");
  return *a;
}

/// Up to k distinct assignments in non-decreasing total cost (Murty).
/// The first element equals solveAssignment(costs).
inline std::vector<Assignment> murtyKBest(const CostMatrix& costs, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  detail::checkCosts(costs);
  const int n = static_cast<int>(costs.rows());

  struct Node {
    Assignment solution;
    CostMatrix constrained;  // forbidden pairs set to +inf, forced pairs isolated
    int fixedRows = 0;  // rows [0, fixedRows) are forced to their solution column
  };
  const auto worse = [](const Node& a, const Node& b) {
    if (a.solution.total != b.solution.total) return a.solution.total > b.solution.total;
    return a.solution.rowToCol > b.solution.rowToCol;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> queue(worse);

  auto first = detail::solveLexicographic(costs);
  if (!first) throw Error(ErrorCode::Infeasible, "no complete assignment with finite cost");
  queue.push(Node{*first, costs, 0});

  std::vector<Assignment> out;
  while (!queue.empty() && static_cast<int>(out.size()) < k) {
    Node node = queue.top();
    queue.pop();
    out.push_back(node.solution);
    if (static_cast<int>(out.size()) == k) break;

    // Child t keeps rows < t at the parent's columns and bans row t's column.
    CostMatrix base = node.constrained;
    for (int t = node.fixedRows; t < n; ++t) {
      const int col = node.solution.rowToCol[t];
      CostMatrix child = base;
      child(t, col) = kForbidden;
      if (auto sol = detail::solveLexicographic(child)) {
        sol->total = detail::assignmentTotal(costs, sol->rowToCol);
        queue.push(Node{std::move(*sol), std::move(child), t});
      }
      // Force (t, col) in the base for subsequent children.
      for (Eigen::Index j = 0; j < base.cols(); ++j)
        if (j != col) base(t, j) = kForbidden;
      for (Eigen::Index i = 0; i < base.rows(); ++i)
        if (i != t) base(i, col) = kForbidden;
    }
  }
  return out;
}

/// k-best assignment for matrices whose rows split into independent blocks
/// (no finite column shared between blocks). Each block is solved with
/// murtyKBest and the products are enumerated best-first, so the totals equal
/// those of murtyKBest(costs, k); assignments with equal totals may come out
/// in a different order.
inline std::vector<Assignment> murtyKBestDecomposed(const CostMatrix& costs, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  detail::checkCosts(costs);
  const int n = static_cast<int>(costs.rows());
  const int m = static_cast<int>(costs.cols());
  if (n == 0) return {Assignment{}};

  // Union rows that share a finite column.
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  const auto find = [&](int i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    return i;
  };
  std::vector<int> colOwner(static_cast<std::size_t>(m), -1);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(costs(i, j))) continue;
      int& o = colOwner[static_cast<std::size_t>(j)];
      if (o < 0) {
        o = i;
      } else {
        const int a = find(o), b = find(i);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
    }

  struct Block {
    std::vector<int> rows, cols;
    std::vector<Assignment> best;
  };
  std::vector<Block> blocks;
  std::vector<int> blockOf(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (blockOf[static_cast<std::size_t>(root)] < 0) {
      blockOf[static_cast<std::size_t>(root)] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[static_cast<std::size_t>(blockOf[static_cast<std::size_t>(root)])].rows.push_back(i);
  }
  for (int j = 0; j < m; ++j)
    if (colOwner[static_cast<std::size_t>(j)] >= 0)
      blocks[static_cast<std::size_t>(blockOf[static_cast<std::size_t>(find(colOwner[static_cast<std::size_t>(j)]))])].cols.push_back(j);
  for (auto& b : blocks) {
    CostMatrix sub(static_cast<Eigen::Index>(b.rows.size()), static_cast<Eigen::Index>(b.cols.size()));
    for (std::size_t r = 0; r < b.rows.size(); ++r)
      for (std::size_t c = 0; c < b.cols.size(); ++c)
        sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = costs(b.rows[r], b.cols[c]);
    b.best = murtyKBest(sub, k);
  }

  // Best-first walk over index tuples into the per-block lists.
  using Tuple = std::vector<int>;
  const auto totalOf = [&](const Tuple& t) {
    double s = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) s += blocks[b].best[static_cast<std::size_t>(t[b])].total;
    return s;
  };
  using Entry = std::pair<double, Tuple>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::set<Tuple> seen;
  Tuple start(blocks.size(), 0);
  queue.emplace(totalOf(start), start);
  seen.insert(start);
  std::vector<Assignment> out;
  while (!queue.empty() && static_cast<int>(out.size()) < k) {
    auto [total, t] = queue.top();
    queue.pop();
    Assignment a;
    a.rowToCol.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& sol = blocks[b].best[static_cast<std::size_t>(t[b])];
      for (std::size_t r = 0; r < blocks[b].rows.size(); ++r)
        a.rowToCol[static_cast<std::size_t>(blocks[b].rows[r])] = blocks[b].cols[static_cast<std::size_t>(sol.rowToCol[r])];
    }
    a.total = detail::assignmentTotal(costs, a.rowToCol);
    out.push_back(std::move(a));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (t[b] + 1 >= static_cast<int>(blocks[b].best.size())) continue;
      Tuple next = t;
      ++next[b];
      if (seen.insert(next).second) queue.emplace(totalOf(next), std::move(next));
    }
  }
  return out;
}

}  // namespace radmot
