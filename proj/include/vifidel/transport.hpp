// Copyright 2026 the vifidel authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vifidel/errors.hpp"
#include "vifidel/textproc.hpp"

namespace vifidel {

/// Exponent of the Euclidean word travel cost; 2 yields squared distances.
struct CostParams {
  double p = 2.0;
};

/// ||u - v||^p. With p = 2 this is the squared Euclidean distance (no sqrt,
/// so exact sums of squares stay exact).
inline double word_travel_cost(std::span<const double> u, std::span<const double> v,
                               const CostParams& params = {}) {
  if (u.size() != v.size()) throw DomainError("word_travel_cost: dimension mismatch");
  if (!(params.p > 0.0)) throw DomainError("cost exponent must be positive");
  double sumsq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double d = u[i] - v[i];
    sumsq += d * d;
  }
  if (params.p == 2.0) return sumsq;
  double dist = std::sqrt(sumsq);
  if (params.p == 1.0) return dist;
  return std::pow(dist, params.p);
}

/// A balanced transportation problem over the combined vocabulary of two
/// distributions: supply row sums, demand column sums, dense cost matrix.
struct TransportProblem {
  std::vector<std::string> vocab;  // lexicographic
  std::vector<double> supply;
  std::vector<double> demand;
  std::vector<std::vector<double>> cost;

  std::size_t size() const { return vocab.size(); }
};

/// An optimal flow matrix and its objective value.
struct TransportPlan {
  std::vector<std::vector<double>> flows;
  double objective = 0.0;
};

namespace detail {

struct DenseSolution {
  std::vector<std::vector<double>> flow;
  double objective = 0.0;
};

/// Network simplex on the dense bipartite transportation graph. The basis is
/// kept as a spanning tree of basic cells; pivots use Bland-style
/// lowest-index selection for both the entering and the leaving arc, which
/// makes the solve deterministic and cycle-free.
inline DenseSolution transportation_simplex(const std::vector<double>& supply,
                                            const std::vector<double>& demand,
                                            const std::vector<std::vector<double>>& cost) {
  const std::size_t m = supply.size();
  const std::size_t k = demand.size();
  std::vector<std::vector<double>> flow(m, std::vector<double>(k, 0.0));
  std::vector<std::vector<char>> basic(m, std::vector<char>(k, 0));

  // Northwest-corner start: always a spanning tree with m + k - 1 cells.
  {
    std::vector<double> ra = supply, rb = demand;
    std::size_t i = 0, j = 0;
    for (;;) {
      double f = std::min(ra[i], rb[j]);
      flow[i][j] = f;
      basic[i][j] = 1;
      ra[i] -= f;
      rb[j] -= f;
      if (i + 1 == m && j + 1 == k) break;
      if (i + 1 == m) {
        ++j;
      } else if (j + 1 == k) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  double cost_scale = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) cost_scale = std::max(cost_scale, cost[i][j]);
  }
  const double tol = 1e-11 * cost_scale;

  std::vector<double> u(m), v(k);
  std::vector<std::vector<std::size_t>> row_adj(m), col_adj(k);

  auto compute_potentials = [&] {
    for (auto& adj : row_adj) adj.clear();
    for (auto& adj : col_adj) adj.clear();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (basic[i][j]) {
          row_adj[i].push_back(j);
          col_adj[j].push_back(i);
        }
      }
    }
    // nodes 0..m-1 are rows, m..m+k-1 are columns
    std::vector<char> done(m + k, 0);
    std::deque<std::size_t> queue;
    u[0] = 0.0;
    done[0] = 1;
    queue.push_back(0);
    while (!queue.empty()) {
      std::size_t node = queue.front();
      queue.pop_front();
      if (node < m) {
        for (std::size_t j : row_adj[node]) {
          if (!done[m + j]) {
            v[j] = cost[node][j] - u[node];
            done[m + j] = 1;
            queue.push_back(m + j);
          }
        }
      } else {
        std::size_t j = node - m;
        for (std::size_t i : col_adj[j]) {
          if (!done[i]) {
            u[i] = cost[i][j] - v[j];
            done[i] = 1;
            queue.push_back(i);
          }
        }
      }
    }
  };

  // Path from row `ei` to column node `ej` through the basis tree; returns
  // the node sequence (rows as i, columns as m + j).
  auto tree_path = [&](std::size_t ei, std::size_t ej) {
    std::vector<std::size_t> parent(m + k, std::numeric_limits<std::size_t>::max());
    std::vector<char> seen(m + k, 0);
    std::deque<std::size_t> queue;
    seen[ei] = 1;
    queue.push_back(ei);
    const std::size_t target = m + ej;
    while (!queue.empty()) {
      std::size_t node = queue.front();
      queue.pop_front();
      if (node == target) break;
      if (node < m) {
        for (std::size_t j : row_adj[node]) {
          if (!seen[m + j]) {
            seen[m + j] = 1;
            parent[m + j] = node;
            queue.push_back(m + j);
          }
        }
      } else {
        for (std::size_t i : col_adj[node - m]) {
          if (!seen[i]) {
            seen[i] = 1;
            parent[i] = node;
            queue.push_back(i);
          }
        }
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = target; node != std::numeric_limits<std::size_t>::max();
         node = parent[node]) {
      path.push_back(node);
      if (node == ei) break;
    }
    std::reverse(path.begin(), path.end());
    return path;  // ei, m+j1, i1, ..., m+ej
  };

  const std::size_t max_pivots = 10000 + 100 * (m + k) * (m + k);
  for (std::size_t pivot = 0;; ++pivot) {
    if (pivot > max_pivots) throw Error("transport solver exceeded its pivot budget");
    compute_potentials();

    std::size_t ei = m, ej = k;
    for (std::size_t i = 0; i < m && ei == m; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (!basic[i][j] && cost[i][j] - u[i] - v[j] < -tol) {
          ei = i;
          ej = j;
          break;
        }
      }
    }
    if (ei == m) break;  // optimal

    std::vector<std::size_t> path = tree_path(ei, ej);
    // Arcs along the path alternate -theta, +theta, ... (the entering arc
    // itself takes +theta).
    struct CycleArc {
      std::size_t i, j;
      bool minus;
    };
    std::vector<CycleArc> arcs;
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
      std::size_t x = path[t], y = path[t + 1];
      std::size_t i = x < m ? x : y;
      std::size_t j = x < m ? y - m : x - m;
      arcs.push_back({i, j, t % 2 == 0});
    }

    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = arcs.size();
    for (std::size_t t = 0; t < arcs.size(); ++t) {
      if (!arcs[t].minus) continue;
      double f = flow[arcs[t].i][arcs[t].j];
      std::size_t idx = arcs[t].i * k + arcs[t].j;
      if (f < theta || (f == theta && (leave == arcs.size() || idx < arcs[leave].i * k + arcs[leave].j))) {
        theta = f;
        leave = t;
      }
    }

    flow[ei][ej] = theta;
    basic[ei][ej] = 1;
    for (const CycleArc& arc : arcs) {
      if (arc.minus) {
        flow[arc.i][arc.j] = std::max(0.0, flow[arc.i][arc.j] - theta);
      } else {
        flow[arc.i][arc.j] += theta;
      }
    }
    flow[arcs[leave].i][arcs[leave].j] = 0.0;
    basic[arcs[leave].i][arcs[leave].j] = 0;
  }

  DenseSolution solution;
  solution.flow = std::move(flow);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (solution.flow[i][j] > 0.0) solution.objective += solution.flow[i][j] * cost[i][j];
    }
  }
  return solution;
}

/// Total order on distributions giving wmd a canonical solve orientation, so
/// wmd(a, b) and wmd(b, a) run the identical pivot sequence.
inline bool should_swap(const WordDistribution& a, const WordDistribution& b) {
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  const std::size_t n = std::min(ea.size(), eb.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (ea[i].token != eb[i].token) return ea[i].token > eb[i].token;
    if (ea[i].weight != eb[i].weight) return ea[i].weight > eb[i].weight;
  }
  if (ea.size() != eb.size()) return ea.size() > eb.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector& va = ea[i].embedding;
    const Vector& vb = eb[i].embedding;
    if (va.size() != vb.size()) return va.size() > vb.size();
    for (std::size_t c = 0; c < va.size(); ++c) {
      if (va[c] != vb[c]) return va[c] > vb[c];
    }
  }
  return false;
}

}  // namespace detail

/// Assembles the transport problem over the combined vocabulary (sorted
/// union of both token sets). Supply carries the source weights, demand the
/// target weights; the cost callback receives the two slot entries.
template <typename CostFn>
TransportProblem build_problem(const WordDistribution& source, const WordDistribution& target,
                               CostFn&& cost_fn) {
  if (source.empty() || target.empty()) {
    throw EmptyDistributionError("transport problem needs two nonempty distributions");
  }
  TransportProblem problem;
  std::vector<const WordEntry*> slots;
  std::vector<double> supply, demand;

  const auto& src = source.entries();
  const auto& tgt = target.entries();
  std::size_t i = 0, j = 0;
  while (i < src.size() || j < tgt.size()) {
    if (j == tgt.size() || (i < src.size() && src[i].token < tgt[j].token)) {
      slots.push_back(&src[i]);
      supply.push_back(src[i].weight);
      demand.push_back(0.0);
      ++i;
    } else if (i == src.size() || tgt[j].token < src[i].token) {
      slots.push_back(&tgt[j]);
      supply.push_back(0.0);
      demand.push_back(tgt[j].weight);
      ++j;
    } else {
      slots.push_back(&src[i]);
      supply.push_back(src[i].weight);
      demand.push_back(tgt[j].weight);
      ++i;
      ++j;
    }
  }

  const std::size_t n = slots.size();
  problem.vocab.reserve(n);
  for (const WordEntry* slot : slots) problem.vocab.push_back(slot->token);
  problem.supply = std::move(supply);
  problem.demand = std::move(demand);
  problem.cost.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      problem.cost[r][c] = cost_fn(*slots[r], *slots[c]);
    }
  }
  return problem;
}

/// Exact optimum of the balanced transportation problem. Marginals are
/// renormalized to sum exactly 1 before solving; imbalance beyond 1e-9 is an
/// input error. Deterministic: fixed input bits give a fixed plan.
inline TransportPlan solve(const TransportProblem& problem) {
  const std::size_t n = problem.size();
  if (problem.supply.size() != n || problem.demand.size() != n || problem.cost.size() != n) {
    throw DomainError("transport problem fields disagree on vocabulary size");
  }
  double supply_sum = 0.0, demand_sum = 0.0;
  for (double s : problem.supply) {
    if (!(s >= 0.0)) throw DomainError("negative or NaN supply weight");
    supply_sum += s;
  }
  for (double d : problem.demand) {
    if (!(d >= 0.0)) throw DomainError("negative or NaN demand weight");
    demand_sum += d;
  }
  for (const auto& row : problem.cost) {
    if (row.size() != n) throw DomainError("cost matrix is not square");
    for (double c : row) {
      if (!std::isfinite(c) || c < 0.0) throw DomainError("cost entries must be finite and >= 0");
    }
  }
  if (std::abs(supply_sum - demand_sum) > 1e-9) {
    throw InfeasibleError("unbalanced transport problem (supply and demand sums differ)");
  }
  if (std::abs(supply_sum - 1.0) > 1e-9 || std::abs(demand_sum - 1.0) > 1e-9) {
    throw InfeasibleError("transport marginals must each sum to 1 within 1e-9");
  }

  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    if (problem.supply[i] > 0.0) rows.push_back(i);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (problem.demand[j] > 0.0) cols.push_back(j);
  }

  std::vector<double> a(rows.size()), b(cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) a[i] = problem.supply[rows[i]] / supply_sum;
  for (std::size_t j = 0; j < cols.size(); ++j) b[j] = problem.demand[cols[j]] / demand_sum;
  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) cost[i][j] = problem.cost[rows[i]][cols[j]];
  }

  detail::DenseSolution solution = detail::transportation_simplex(a, b, cost);

  TransportPlan plan;
  plan.flows.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      plan.flows[rows[i]][cols[j]] = solution.flow[i][j];
    }
  }
  plan.objective = solution.objective;
  return plan;
}

/// Solves source -> target under a symmetric cost callback. The pair is
/// reordered internally to a canonical orientation (and the plan transposed
/// back), so swapping the arguments returns bit-identical objectives.
template <typename CostFn>
TransportPlan solve_pair(const WordDistribution& source, const WordDistribution& target,
                         CostFn&& cost_fn) {
  if (!detail::should_swap(source, target)) {
    return solve(build_problem(source, target, cost_fn));
  }
  TransportPlan plan = solve(build_problem(target, source, cost_fn));
  const std::size_t n = plan.flows.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) std::swap(plan.flows[i][j], plan.flows[j][i]);
  }
  return plan;
}

/// Word mover's distance between two normalized bags of words.
inline double wmd(const WordDistribution& a, const WordDistribution& b,
                  const CostParams& params = {}) {
  return solve_pair(a, b,
                    [&](const WordEntry& x, const WordEntry& y) {
                      return word_travel_cost(x.embedding, y.embedding, params);
                    })
      .objective;
}

}  // namespace vifidel
