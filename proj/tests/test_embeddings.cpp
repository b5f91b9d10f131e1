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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support/synthetic.hpp"
#include "support/tempfile.hpp"
#include "vifidel/embedding.hpp"

using namespace vifidel;

TEST_CASE("text loader parses plain and headered files identically", "[embeddings]") {
  testfs::TempDir dir;
  auto plain = dir.write("plain.txt", "dog 1.0 0.0\ncat 0.0 1.0\n");
  auto headered = dir.write("headered.txt", "2 2\ndog 1.0 0.0\ncat 0.0 1.0\n");

  EmbeddingTable a = load_text_embeddings(plain);
  REQUIRE(a.dimension() == 2);
  REQUIRE(a.size() == 2);
  REQUIRE(a.find("dog"));
  REQUIRE((*a.find("dog"))[0] == 1.0);
  REQUIRE((*a.find("cat"))[1] == 1.0);

  EmbeddingTable b = load_text_embeddings(headered);
  REQUIRE(b.dimension() == a.dimension());
  REQUIRE(b.tokens() == a.tokens());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a.dimension(); ++k) {
      REQUIRE(a.row(i)[k] == b.row(i)[k]);
    }
  }
}

TEST_CASE("text loader error paths", "[embeddings]") {
  testfs::TempDir dir;
  SECTION("wrong component count names the line") {
    auto p = dir.write("bad.txt", "dog 1.0 0.0\ncat 0.0 1.0\nfox 1.0\n");
    try {
      load_text_embeddings(p);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      REQUIRE(e.line() == 3);
    }
  }
  SECTION("non-numeric component") {
    auto p = dir.write("bad.txt", "dog 1.0 zero\n");
    REQUIRE_THROWS_AS(load_text_embeddings(p), ParseError);
  }
  SECTION("nonpositive header") {
    auto p = dir.write("bad.txt", "0 0\n");
    REQUIRE_THROWS_AS(load_text_embeddings(p), FormatError);
  }
  SECTION("empty file") {
    auto p = dir.write("bad.txt", "");
    REQUIRE_THROWS_AS(load_text_embeddings(p), FormatError);
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_text_embeddings(dir.file("nope.txt")), FormatError);
  }
  SECTION("duplicate tokens keep the first occurrence") {
    auto p = dir.write("dup.txt", "dog 1.0 0.0\ndog 9.0 9.0\n");
    EmbeddingTable t = load_text_embeddings(p);
    REQUIRE(t.size() == 1);
    REQUIRE((*t.find("dog"))[0] == 1.0);
  }
}

TEST_CASE("binary loader round-trips through the writer bit-for-bit", "[embeddings]") {
  testfs::TempDir dir;
  EmbeddingTable source(3);
  source.insert("dog", Vector{1.0, 0.0, 0.5});
  source.insert("cat", Vector{0.0, 1.0, -0.25});

  auto bin = dir.file("vectors.bin");
  save_binary_embeddings(source, bin);
  EmbeddingTable loaded = load_binary_embeddings(bin);
  REQUIRE(loaded.dimension() == 3);
  REQUIRE(loaded.tokens() == source.tokens());
  for (std::size_t i = 0; i < source.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      REQUIRE(loaded.row(i)[k] == source.row(i)[k]);  // values chosen float32-exact
    }
  }

  // reloading the writer's own output is bit-identical
  auto bin2 = dir.file("vectors2.bin");
  save_binary_embeddings(loaded, bin2);
  REQUIRE(testfs::slurp(bin) == testfs::slurp(bin2));
}

TEST_CASE("binary and text loaders agree on equivalent content", "[embeddings]") {
  testfs::TempDir dir;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  EmbeddingTable table(4);
  std::string text;
  for (int w = 0; w < 5; ++w) {
    std::string token = "tok" + std::to_string(w);
    Vector vec(4);
    text += token;
    for (double& x : vec) {
      x = val(rng);
      text += " " + std::to_string(x);
    }
    text += "\n";
    table.insert(token, vec);
  }
  auto bin = dir.file("t.bin");
  save_binary_embeddings(table, bin);
  EmbeddingTable from_text = load_text_embeddings(dir.write("t.txt", text));
  EmbeddingTable from_bin = load_binary_embeddings(bin);
  REQUIRE(from_text.tokens() == from_bin.tokens());
  for (std::size_t i = 0; i < from_text.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      // float32 storage loses precision; both routes must agree to 1e-6
      REQUIRE(std::abs(from_text.row(i)[k] - from_bin.row(i)[k]) < 1e-6);
    }
  }
}

TEST_CASE("binary loader error paths", "[embeddings]") {
  testfs::TempDir dir;
  SECTION("truncated after header") {
    auto p = dir.write("t.bin", "2 4\n");
    REQUIRE_THROWS_AS(load_binary_embeddings(p), FormatError);
  }
  SECTION("truncated mid-vector") {
    EmbeddingTable table(4);
    table.insert("dog", Vector{1, 2, 3, 4});
    auto p = dir.file("t.bin");
    save_binary_embeddings(table, p);
    std::string bytes = testfs::slurp(p);
    dir.write("cut.bin", std::string_view(bytes).substr(0, bytes.size() - 6));
    REQUIRE_THROWS_AS(load_binary_embeddings(dir.file("cut.bin")), FormatError);
  }
  SECTION("bad header") {
    auto p = dir.write("t.bin", "banana\n");
    REQUIRE_THROWS_AS(load_binary_embeddings(p), FormatError);
  }
}

TEST_CASE("format sniffing picks the right loader", "[embeddings]") {
  testfs::TempDir dir;
  EmbeddingTable table(3);
  table.insert("dog", Vector{0.25, -1.5, 3.0});
  table.insert("cat", Vector{1.0, 2.0, -0.125});
  auto bin = dir.file("t.bin");
  save_binary_embeddings(table, bin);
  auto headered = dir.write("headered.txt", "2 3\ndog 0.25 -1.5 3.0\ncat 1.0 2.0 -0.125\n");
  auto plain = dir.write("plain.txt", "dog 0.25 -1.5 3.0\ncat 1.0 2.0 -0.125\n");

  REQUIRE(sniff_embedding_format(bin) == EmbeddingFormat::binary);
  REQUIRE(sniff_embedding_format(headered) == EmbeddingFormat::text);
  REQUIRE(sniff_embedding_format(plain) == EmbeddingFormat::text);

  EmbeddingTable via_auto = load_embeddings(bin);
  REQUIRE(via_auto.tokens() == table.tokens());
  REQUIRE(load_embeddings(headered).size() == 2);
}

TEST_CASE("lookup follows the fallback chain", "[embeddings]") {
  EmbeddingTable table = synthetic::make_table(
      2, {{"dog", {1.0, 0.0}}, {"dining", {1.0, 0.0}}, {"table", {0.0, 1.0}},
          {"wine_glass", {0.5, 0.5}}, {"glass", {0.0, 2.0}}});

  SECTION("exact match") {
    auto v = lookup(table, "dog");
    REQUIRE(v);
    REQUIRE(*v == Vector{1.0, 0.0});
  }
  SECTION("lowercase fallback") {
    auto v = lookup(table, "Dog");
    REQUIRE(v);
    REQUIRE(*v == Vector{1.0, 0.0});
  }
  SECTION("underscore join wins before averaging") {
    auto v = lookup(table, "wine-glass");
    REQUIRE(v);
    REQUIRE(*v == Vector{0.5, 0.5});
  }
  SECTION("token average of the parts that exist") {
    auto v = lookup(table, "dining-table");
    REQUIRE(v);
    REQUIRE(*v == Vector{0.5, 0.5});
  }
  SECTION("average skips missing parts") {
    auto v = lookup(table, "small table");
    REQUIRE(v);
    REQUIRE(*v == Vector{0.0, 1.0});
  }
  SECTION("out of vocabulary drops or throws per policy") {
    REQUIRE_FALSE(lookup(table, "zyzzyva"));
    LookupPolicy strict;
    strict.oov_behavior = OovBehavior::error;
    try {
      lookup(table, "zyzzyva", strict);
      FAIL("expected LookupError");
    } catch (const LookupError& e) {
      REQUIRE(e.token() == "zyzzyva");
    }
  }
  SECTION("empty token and empty join list are domain errors") {
    REQUIRE_THROWS_AS(lookup(table, ""), DomainError);
    LookupPolicy broken;
    broken.multiword_join.clear();
    REQUIRE_THROWS_AS(lookup(table, "dog", broken), DomainError);
  }
  SECTION("lookup is deterministic") {
    auto a = lookup(table, "dining-table");
    auto b = lookup(table, "dining-table");
    REQUIRE(*a == *b);
  }
}

TEST_CASE("cosine similarity", "[embeddings]") {
  REQUIRE(cosine(Vector{1.0, 0.0}, Vector{1.0, 0.0}) == 1.0);
  REQUIRE(cosine(Vector{1.0, 0.0}, Vector{0.0, 1.0}) == 0.0);
  REQUIRE(cosine(Vector{1.0, 0.0}, Vector{-1.0, 0.0}) == -1.0);
  REQUIRE_THROWS_AS(cosine(Vector{0.0, 0.0}, Vector{1.0, 0.0}), DomainError);
  REQUIRE_THROWS_AS(cosine(Vector{1.0}, Vector{1.0, 0.0}), DomainError);
}

TEST_CASE("cosine is symmetric and scale invariant", "[embeddings]") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int round = 0; round < 100; ++round) {
    Vector u(5), v(5);
    for (double& x : u) x = val(rng);
    for (double& x : v) x = val(rng);
    u[0] += 1.5;  // keep norms off zero
    v[1] += 1.5;
    double base = cosine(u, v);
    REQUIRE(base >= -1.0);
    REQUIRE(base <= 1.0);
    REQUIRE(cosine(v, u) == base);

    Vector su = u, sv = v;
    double a = scale(rng), b = scale(rng);
    for (double& x : su) x *= a;
    for (double& x : sv) x *= b;
    REQUIRE(cosine(su, sv) == Catch::Approx(base).margin(1e-12));
  }
}
