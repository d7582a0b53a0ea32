#include <doctest.h>

#include <cmath>
#include <set>

#include "shardmemo/embedding.hpp"
#include "shardmemo/error.hpp"

using namespace shardmemo;

TEST_CASE("fnv1a64 matches the published test vectors at seed 0") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("embedding is deterministic and unit length") {
  HashingEmbedder emb;
  CHECK(emb.embed("a b") == emb.embed("a b"));
  for (const char* t : {"a", "hello world", "What did we discuss about the garden?", "x y z x y z"}) {
    CHECK(std::abs(emb.embed(t).norm() - 1.0) < 1e-9);
    CHECK(std::abs(l2_norm(emb.embed(t).values()) - 1.0) < 1e-9);
  }
  CHECK(emb.embed("a").dimension() == kDefaultEmbeddingDim);
}

TEST_CASE("tokenization lower-cases and strips edge punctuation") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(HashingEmbedder().embed("Garden?") == HashingEmbedder().embed("garden"));
  CHECK(tokenize("?? ok") == std::vector<std::string>{"??", "ok"});
}

TEST_CASE("single-token collision rate over a 1000-token corpus stays below 5%") {
  HashingEmbedder emb;
  // Independent oracle: a single token maps to +-e_i, so two tokens collide
  // exactly when their signed buckets agree.
  std::size_t collisions = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string a = "tok" + std::to_string(2 * i), b = "tok" + std::to_string(2 * i + 1);
    const auto va = emb.embed(a).values();
    const auto vb = emb.embed(b).values();
    std::size_t nonzero = 0;
    for (double x : va) nonzero += x != 0.0;
    CHECK(nonzero == 1);
    collisions += va == vb;
  }
  CHECK(collisions < 50);
}

TEST_CASE("seed changes the embedding") {
  CHECK_FALSE(HashingEmbedder(64, 1).embed("garden party") == HashingEmbedder(64, 2).embed("garden party"));
}

TEST_CASE("empty text is rejected") {
  HashingEmbedder emb;
  CHECK_THROWS_AS(emb.embed(""), Error);
  CHECK_THROWS_AS(emb.embed("   "), Error);
  CHECK_THROWS_AS(HashingEmbedder(0), Error);
}

TEST_CASE("zero vectors cannot be normalized") {
  CHECK_THROWS_AS(Embedding(std::vector<double>{0.0, 0.0}).normalized(), Error);
  CHECK_THROWS_AS(Embedding(std::vector<double>{NAN, 1.0}), Error);
}

TEST_CASE("structured features") {
  FeatureExtractor fx;
  const auto three = fx.features_of("where is it").values;
  CHECK(three.size() == 16);
  CHECK(three[0] == 1.0);
  CHECK(three[1] + three[2] + three[3] == 0.0);
  CHECK(fx.features_of("what happened before lunch").values[4] == 1.0);
  CHECK(fx.features_of("what happened at lunch").values[4] == 0.0);
  CHECK(fx.features_of("x").values == fx.features_of("x").values);
  CHECK(fx.features_of("we met Alice Smith").values[7] == 1.0);
  CHECK(fx.features_of("which food the user prefers").values[8] == 1.0);
  CHECK(fx.features_of("what was noticed").values[9] == 1.0);
  CHECK(fx.features_of("what we talked").values[10] == 1.0);
  CHECK(fx.features_of("how do i book a table").values[12] == 1.0);
  CHECK(fx.features_of("how do i book a table").values[13] == 1.0);
  CHECK(fx.features_of("n=3").values[14] == 1.0);
  CHECK(fx.features_of("anything").values[15] == 1.0);
}

TEST_CASE("request vector concatenates z then phi") {
  const Embedding z(std::vector<double>{1.0, 0.0});
  const StructuredFeatures phi{{5.0}};
  CHECK(request_features(z, phi, 2, 1) == std::vector<double>{1.0, 0.0, 5.0});
  HashingEmbedder emb;
  FeatureExtractor fx;
  const auto r = request_features(emb.embed("a b c"), fx.features_of("a b c"), 64, 16);
  CHECK(r.size() == 80);
  CHECK(std::vector<double>(r.begin(), r.begin() + 64) == emb.embed("a b c").values());
  CHECK(std::vector<double>(r.begin() + 64, r.end()) == fx.features_of("a b c").values);
  CHECK_THROWS_AS(request_features(z, phi, 3, 1), Error);
}
