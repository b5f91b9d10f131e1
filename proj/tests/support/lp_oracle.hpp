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
//
// Test-side oracle: a dense two-phase tableau simplex over the full
// transportation LP. Written independently of the library's network simplex
// so the two implementations can check each other.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lp_oracle {

struct LpResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

/// min c.x subject to A x = b, x >= 0, with b >= 0 componentwise.
inline LpResult solve_equality_lp(const std::vector<std::vector<double>>& A,
                                  const std::vector<double>& b, const std::vector<double>& c) {
  const std::size_t m = A.size();
  const std::size_t n = c.size();
  const std::size_t total = n + m;  // artificial columns appended
  std::vector<std::vector<double>> T(m, std::vector<double>(total + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (A[i].size() != n) throw std::runtime_error("oracle: bad constraint row");
    if (b[i] < 0.0) throw std::runtime_error("oracle: negative rhs");
    for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
    T[i][n + i] = 1.0;
    T[i][total] = b[i];
    basis[i] = n + i;
  }

  auto pivot = [&](std::size_t pr, std::size_t pc) {
    double p = T[pr][pc];
    for (double& v : T[pr]) v /= p;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == pr) continue;
      double f = T[i][pc];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= total; ++j) T[i][j] -= f * T[pr][j];
    }
    basis[pr] = pc;
  };

  // Bland's rule: entering = lowest-index column pricing negative; leaving =
  // min ratio, ties broken by lowest basic variable index.
  auto run = [&](const std::vector<double>& cost, std::size_t allowed) {
    for (std::size_t iter = 0; iter < 200000; ++iter) {
      std::size_t pc = total;
      for (std::size_t j = 0; j < allowed; ++j) {
        double reduced = cost[j];
        for (std::size_t i = 0; i < m; ++i) reduced -= cost[basis[i]] * T[i][j];
        if (reduced < -1e-10) {
          pc = j;
          break;
        }
      }
      if (pc == total) return;
      std::size_t pr = m;
      double best = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (T[i][pc] > 1e-9) {
          double ratio = T[i][total] / T[i][pc];
          if (pr == m || ratio < best - 1e-12 ||
              (std::abs(ratio - best) <= 1e-12 && basis[i] < basis[pr])) {
            pr = i;
            best = ratio;
          }
        }
      }
      if (pr == m) throw std::runtime_error("oracle: unbounded LP");
      pivot(pr, pc);
    }
    throw std::runtime_error("oracle: iteration cap reached");
  };

  // phase 1: minimize the sum of artificials (they may leave, never re-enter)
  std::vector<double> phase1(total, 0.0);
  for (std::size_t j = n; j < total; ++j) phase1[j] = 1.0;
  run(phase1, n);
  double infeasibility = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] >= n) infeasibility += T[i][total];
  }
  LpResult result;
  if (infeasibility > 1e-7) return result;

  // Degenerate artificials still in the basis would corrupt phase 2: pivot
  // them out on any nonzero real column, or recognize the row as redundant.
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(T[i][j]) > 1e-9) {
        pivot(i, j);
        break;
      }
    }
    // all-zero row: redundant constraint, the zero artificial stays parked
  }

  std::vector<double> phase2(total, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
  run(phase2, n);

  result.feasible = true;
  result.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) result.x[basis[i]] = T[i][total];
  }
  for (std::size_t j = 0; j < n; ++j) result.objective += c[j] * result.x[j];
  return result;
}

/// Optimal objective of the dense m x k transportation problem, by brute
/// force over the full equality LP (both marginal families kept, including
/// the redundant constraint).
inline double transport_objective(const std::vector<double>& supply,
                                  const std::vector<double>& demand,
                                  const std::vector<std::vector<double>>& cost) {
  const std::size_t m = supply.size(), k = demand.size();
  const std::size_t n = m * k;
  std::vector<std::vector<double>> A(m + k, std::vector<double>(n, 0.0));
  std::vector<double> b(m + k, 0.0), c(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    b[i] = supply[i];
    for (std::size_t j = 0; j < k; ++j) {
      A[i][i * k + j] = 1.0;
      c[i * k + j] = cost[i][j];
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    b[m + j] = demand[j];
    for (std::size_t i = 0; i < m; ++i) A[m + j][i * k + j] = 1.0;
  }
  LpResult result = solve_equality_lp(A, b, c);
  if (!result.feasible) throw std::runtime_error("oracle: transportation instance infeasible");
  return result.objective;
}

}  // namespace lp_oracle
