#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shardmemo/types.hpp"

namespace shardmemo {

inline constexpr std::size_t kDefaultEmbeddingDim = 64;
inline constexpr std::size_t kDefaultFeatureDim = 16;
inline constexpr std::uint64_t kDefaultHashSeed = 0x5348415244ULL;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t dimension() const { return values_.size(); }
  double norm() const { return norm_; }

  /// Unit-length copy. Throws on a zero or non-finite vector.
  Embedding normalized() const;

  bool operator==(const Embedding& o) const { return values_ == o.values_; }

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual Embedding embed(std::string_view text) const = 0;
};

// Signed feature hashing of whitespace tokens (lower-cased, edge
// punctuation stripped), L2-normalized. Stateless and thread-safe.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = kDefaultEmbeddingDim,
                           std::uint64_t seed = kDefaultHashSeed);

  std::size_t dimension() const override { return dim_; }
  Embedding embed(std::string_view text) const override;

  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

/// Lower-cased tokens with leading/trailing punctuation removed. Tokens
/// made only of punctuation are kept verbatim.
std::vector<std::string> tokenize(std::string_view text);

struct StructuredFeatures {
  std::vector<double> values;
};

// Feature layout (F = 16):
//   [0,4)   query length bucket one-hot: <=3, <=6, <=10, >10 tokens
//   [4]     temporal keyword flag
//   [5,8)   entity-count bucket one-hot: 0, 1, >=2 capitalized tokens
//   [8,11)  family hints: profile, observation, session vocabulary
//   [11]    question flag
//   [12]    tool/action verb flag
//   [13]    how-to flag
//   [14]    digit present
//   [15]    constant 1
class FeatureExtractor {
 public:
  static constexpr std::size_t kDim = kDefaultFeatureDim;

  std::size_t dimension() const { return kDim; }
  StructuredFeatures features(const Request& q) const { return features_of(q.query_text); }
  StructuredFeatures features_of(std::string_view text) const;
};

/// r = [z; phi]. Throws DimensionMismatch when either part has the wrong width.
std::vector<double> request_features(const Embedding& z, const StructuredFeatures& phi,
                                     std::size_t expected_d, std::size_t expected_f);

}  // namespace shardmemo
