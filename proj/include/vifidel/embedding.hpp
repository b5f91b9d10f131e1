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
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vifidel/errors.hpp"
#include "vifidel/util.hpp"

namespace vifidel {

using Vector = std::vector<double>;

/// A fixed vocabulary of K-dimensional word vectors. Immutable once loaded;
/// concurrent reads are safe.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw DomainError("embedding dimension must be positive");
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const { return index_.find(std::string(token)) != index_.end(); }

  /// Tokens in insertion (file) order.
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dimension_, dimension_};
  }

  std::optional<std::span<const double>> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return row(it->second);
  }

  /// Inserts a vector, keeping the first occurrence of a duplicate token.
  /// Returns false when the token was already present.
  bool insert(std::string token, std::span<const double> vec) {
    if (vec.size() != dimension_) {
      throw DomainError("vector for '" + token + "' has " + std::to_string(vec.size()) +
                        " components, table dimension is " + std::to_string(dimension_));
    }
    for (double v : vec) {
      if (!std::isfinite(v)) throw DomainError("non-finite component in vector for '" + token + "'");
    }
    auto [it, fresh] = index_.try_emplace(std::move(token), tokens_.size());
    if (!fresh) return false;
    tokens_.push_back(it->first);
    data_.insert(data_.end(), vec.begin(), vec.end());
    return true;
  }

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> tokens_;
  std::vector<double> data_;  // |vocab| x K, row major
};

enum class JoinStrategy { underscore_join, token_average };
enum class OovBehavior { drop_with_warning, error };

/// How raw tokens and multi-word labels resolve against a table.
struct LookupPolicy {
  bool lowercase = true;
  std::vector<JoinStrategy> multiword_join = {JoinStrategy::underscore_join,
                                              JoinStrategy::token_average};
  OovBehavior oov_behavior = OovBehavior::drop_with_warning;
};

enum class EmbeddingFormat { text, binary, auto_detect };

namespace detail {

inline std::optional<std::span<const double>> direct_match(const EmbeddingTable& table,
                                                           std::string_view token,
                                                           const LookupPolicy& policy) {
  if (auto hit = table.find(token)) return hit;
  if (policy.lowercase) {
    std::string lowered = util::to_lower(token);
    if (lowered != token) {
      if (auto hit = table.find(lowered)) return hit;
    }
  }
  return std::nullopt;
}

inline bool parse_positive_int(std::string_view s, std::uint64_t& out) {
  if (s.empty() || s.size() > 18) return false;
  std::uint64_t value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = value;
  return true;
}

inline bool looks_like_header(const std::vector<std::string>& fields, std::uint64_t& count,
                              std::uint64_t& dim) {
  return fields.size() == 2 && parse_positive_int(fields[0], count) &&
         parse_positive_int(fields[1], dim);
}

inline bool valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    unsigned char c = static_cast<unsigned char>(bytes[i]);
    std::size_t extra;
    if (c < 0x80) {
      extra = 0;
    } else if ((c >> 5) == 0x6) {
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= bytes.size()) return true;  // truncated tail is inconclusive, accept
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(bytes[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

}  // namespace detail

/// Resolves a token to a vector. The fallback chain: exact match, lowercased
/// match, then for multi-word labels (split on space/hyphen) each configured
/// join strategy in order. Returns nullopt when nothing resolves and the
/// policy says to drop; throws LookupError when the policy says to error.
inline std::optional<Vector> lookup(const EmbeddingTable& table, std::string_view token,
                                    const LookupPolicy& policy = {}) {
  if (token.empty()) throw DomainError("lookup token must be nonempty");
  if (policy.multiword_join.empty()) {
    throw DomainError("lookup policy needs at least one multiword join strategy");
  }
  if (auto hit = detail::direct_match(table, token, policy)) {
    return Vector(hit->begin(), hit->end());
  }
  std::vector<std::string> parts = util::split_on(token, " -");
  if (parts.size() > 1) {
    for (JoinStrategy strategy : policy.multiword_join) {
      if (strategy == JoinStrategy::underscore_join) {
        std::string joined = parts[0];
        for (std::size_t i = 1; i < parts.size(); ++i) joined += "_" + parts[i];
        if (auto hit = detail::direct_match(table, joined, policy)) {
          return Vector(hit->begin(), hit->end());
        }
      } else {
        Vector mean(table.dimension(), 0.0);
        std::size_t found = 0;
        for (const std::string& part : parts) {
          if (auto hit = detail::direct_match(table, part, policy)) {
            for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += (*hit)[k];
            ++found;
          }
        }
        if (found > 0) {
          for (double& v : mean) v /= static_cast<double>(found);
          return mean;
        }
      }
    }
  }
  if (policy.oov_behavior == OovBehavior::error) throw LookupError(std::string(token));
  return std::nullopt;
}

/// Cosine similarity, clamped to [-1, 1] against rounding.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("cosine: dimension mismatch");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw DomainError("cosine: zero-norm input");
  double value = dot / std::sqrt(uu * vv);
  return std::clamp(value, -1.0, 1.0);
}

/// Loads word2vec text format: an optional "<count> <dim>" header line, then
/// one "token v1 .. vK" line per word. Duplicate tokens keep the first
/// occurrence.
inline EmbeddingTable load_text_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embeddings file: " + path.string());

  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  EmbeddingTable table;
  bool table_ready = false;

  auto add_line = [&](const std::vector<std::string>& fields) {
    if (fields.size() < 2) {
      throw ParseError("embedding line needs a token and at least one component", lineno);
    }
    if (!table_ready) {
      if (dim == 0) dim = fields.size() - 1;  // no header: first data line fixes K
      table = EmbeddingTable(dim);
      table_ready = true;
    }
    if (fields.size() - 1 != dim) {
      throw ParseError("expected " + std::to_string(dim) + " components, got " +
                           std::to_string(fields.size() - 1),
                       lineno);
    }
    Vector vec(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      try {
        std::size_t used = 0;
        vec[k] = std::stod(fields[k + 1], &used);
        if (used != fields[k + 1].size()) throw std::invalid_argument("trailing junk");
      } catch (const std::exception&) {
        throw ParseError("bad numeric component '" + fields[k + 1] + "'", lineno);
      }
      if (!std::isfinite(vec[k])) throw ParseError("non-finite component", lineno);
    }
    table.insert(fields[0], vec);
  };

  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    std::vector<std::string> fields = util::split_ws(line);
    if (first) {
      first = false;
      std::uint64_t count = 0, header_dim = 0;
      if (detail::looks_like_header(fields, count, header_dim)) {
        if (count == 0 || header_dim == 0) {
          throw FormatError("embedding header must have positive count and dimension");
        }
        dim = static_cast<std::size_t>(header_dim);
        continue;
      }
    }
    add_line(fields);
  }
  if (!table_ready) {
    if (dim > 0) return EmbeddingTable(dim);  // header-only file: empty table
    throw FormatError("embedding file has no vectors: " + path.string());
  }
  return table;
}

/// Loads word2vec binary format: ASCII header "<count> <dim>\n", then per
/// entry a space-terminated token followed by dim little-endian float32
/// values, optionally followed by a newline. Vectors are widened to double.
inline EmbeddingTable load_binary_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open embeddings file: " + path.string());

  std::string header;
  if (!std::getline(in, header)) throw FormatError("missing binary embedding header");
  std::vector<std::string> fields = util::split_ws(header);
  std::uint64_t count = 0, dim = 0;
  if (!detail::looks_like_header(fields, count, dim) || count == 0 || dim == 0) {
    throw FormatError("binary embedding header must be '<count> <dim>' with positive values");
  }

  EmbeddingTable table(static_cast<std::size_t>(dim));
  std::vector<char> raw(static_cast<std::size_t>(dim) * 4);
  Vector vec(static_cast<std::size_t>(dim));
  for (std::uint64_t e = 0; e < count; ++e) {
    std::string token;
    int c;
    while ((c = in.get()) != std::char_traits<char>::eof()) {
      if (c == ' ') break;
      if (token.empty() && (c == '\n' || c == '\r')) continue;  // writers pad entries
      token.push_back(static_cast<char>(c));
    }
    if (c == std::char_traits<char>::eof()) {
      throw FormatError("truncated binary embedding file (entry " + std::to_string(e + 1) + ")");
    }
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
      throw FormatError("truncated binary embedding file (vector for '" + token + "')");
    }
    for (std::uint64_t k = 0; k < dim; ++k) {
      std::uint32_t bits = static_cast<std::uint8_t>(raw[k * 4]) |
                           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(raw[k * 4 + 1])) << 8) |
                           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(raw[k * 4 + 2])) << 16) |
                           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(raw[k * 4 + 3])) << 24);
      vec[k] = static_cast<double>(std::bit_cast<float>(bits));
      if (!std::isfinite(vec[k])) {
        throw FormatError("non-finite component in binary vector for '" + token + "'");
      }
    }
    table.insert(token, vec);
  }
  return table;
}

/// Writes the table in word2vec binary format (float32, little endian).
inline void save_binary_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write embeddings file: " + path.string());
  out << table.size() << " " << table.dimension() << "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i] << ' ';
    for (double v : table.row(i)) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      char raw[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                     static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
      out.write(raw, 4);
    }
    out << '\n';
  }
  if (!out) throw FormatError("failed writing embeddings file: " + path.string());
}

/// Binary iff the header line parses and the bytes after it are not UTF-8
/// token data.
inline EmbeddingFormat sniff_embedding_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open embeddings file: " + path.string());
  std::string chunk(1 << 16, '\0');
  in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  chunk.resize(static_cast<std::size_t>(in.gcount()));

  std::size_t eol = chunk.find('\n');
  if (eol == std::string::npos) return EmbeddingFormat::text;
  std::uint64_t count = 0, dim = 0;
  if (!detail::looks_like_header(util::split_ws(chunk.substr(0, eol)), count, dim)) {
    return EmbeddingFormat::text;
  }
  std::string_view body(chunk.data() + eol + 1,
                        std::min<std::size_t>(chunk.size() - eol - 1, 4096));
  for (char c : body) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x20 && c != '\t' && c != '\n' && c != '\r') return EmbeddingFormat::binary;
  }
  return detail::valid_utf8(body) ? EmbeddingFormat::text : EmbeddingFormat::binary;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path,
                                      EmbeddingFormat format = EmbeddingFormat::auto_detect) {
  if (format == EmbeddingFormat::auto_detect) format = sniff_embedding_format(path);
  return format == EmbeddingFormat::binary ? load_binary_embeddings(path)
                                           : load_text_embeddings(path);
}

}  // namespace vifidel
