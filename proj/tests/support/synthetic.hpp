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

#include <map>
#include <random>
#include <string>
#include <vector>

#include "vifidel/embedding.hpp"
#include "vifidel/textproc.hpp"

namespace synthetic {

inline vifidel::EmbeddingTable make_table(std::size_t dim,
                                          const std::map<std::string, vifidel::Vector>& vecs) {
  vifidel::EmbeddingTable table(dim);
  for (const auto& [token, vec] : vecs) table.insert(token, vec);
  return table;
}

/// Token "w00".."w<n-1>" mapped to scale * e_i. All arithmetic over these
/// vectors is exact in doubles (distinct pairs are at squared distance
/// 2 * scale^2).
inline std::string basis_token(std::size_t i) {
  return "w" + std::string(i < 10 ? "0" : "") + std::to_string(i);
}

inline vifidel::EmbeddingTable basis_table(std::size_t n, double scale = 1.0) {
  vifidel::EmbeddingTable table(n);
  for (std::size_t i = 0; i < n; ++i) {
    vifidel::Vector v(n, 0.0);
    v[i] = scale;
    table.insert(basis_token(i), v);
  }
  return table;
}

inline vifidel::WordDistribution dist(const vifidel::EmbeddingTable& table,
                                      const std::map<std::string, double>& counts) {
  return vifidel::WordDistribution::from_counts(counts, table, {});
}

/// Random normalized weights over `size` slots: positive integers scaled by
/// their total, so the marginals are rational and sum to ~1 exactly enough.
inline std::vector<double> random_weights(std::mt19937& rng, std::size_t size) {
  std::uniform_int_distribution<int> pick(1, 9);
  std::vector<double> w(size);
  double total = 0.0;
  for (double& x : w) {
    x = static_cast<double>(pick(rng));
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace synthetic
