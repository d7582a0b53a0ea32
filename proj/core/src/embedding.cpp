#include "shardmemo/embedding.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>

#include "shardmemo/error.hpp"

namespace shardmemo {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  for (double x : values_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite embedding entry");
  }
  norm_ = l2_norm(values_);
}

Embedding Embedding::normalized() const {
  if (!(norm_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero vector");
  std::vector<double> out(values_);
  for (double& x : out) x /= norm_;
  return Embedding(std::move(out));
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::vector<std::string> raw_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string normalize_token(const std::string& raw) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && is_punct(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && is_punct(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string t = (b == e) ? raw : raw.substr(b, e - b);
  for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return t;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& raw : raw_tokens(text)) out.push_back(normalize_token(raw));
  return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidConfig, "embedding dimension must be positive");
}

Embedding HashingEmbedder::embed(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
  std::vector<double> v(dim_, 0.0);
  for (const auto& tok : tokens) {
    const std::uint64_t h = mix64(fnv1a64(tok, seed_));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % dim_] += sign;
  }
  if (l2_norm(v) == 0.0) {
    // Signed collisions cancelled out; fall back to a whole-text bucket.
    const std::uint64_t h = mix64(fnv1a64(text, seed_ ^ 0xA5A5A5A5ULL));
    v[h % dim_] = 1.0;
  }
  return Embedding(std::move(v)).normalized();
}

namespace {

constexpr std::array<std::string_view, 12> kTemporal = {
    "when", "before", "after", "during", "date", "time",
    "ago",  "yesterday", "last", "first", "since", "until"};
constexpr std::array<std::string_view, 8> kProfileHints = {
    "favorite", "likes", "name", "age", "job", "profile", "prefers", "hometown"};
constexpr std::array<std::string_view, 6> kObservationHints = {
    "noticed", "said", "mentioned", "saw", "observed", "told"};
constexpr std::array<std::string_view, 6> kSessionHints = {
    "conversation", "session", "talked", "chat", "discussed", "dialog"};
constexpr std::array<std::string_view, 10> kActionVerbs = {
    "book", "find", "search", "call", "run", "compute", "convert", "send", "schedule", "fetch"};
constexpr std::array<std::string_view, 8> kWhWords = {
    "what", "who", "where", "when", "which", "why", "how", "whose"};

template <std::size_t N>
bool contains_any(const std::vector<std::string>& toks, const std::array<std::string_view, N>& set) {
  return std::any_of(toks.begin(), toks.end(), [&](const std::string& t) {
    return std::find(set.begin(), set.end(), t) != set.end();
  });
}

}  // namespace

StructuredFeatures FeatureExtractor::features_of(std::string_view text) const {
  StructuredFeatures phi{std::vector<double>(kDim, 0.0)};
  auto& f = phi.values;
  const auto raw = raw_tokens(text);
  const auto toks = tokenize(text);
  const std::size_t n = toks.size();

  const std::size_t len_bucket = n <= 3 ? 0 : n <= 6 ? 1 : n <= 10 ? 2 : 3;
  f[len_bucket] = 1.0;
  f[4] = contains_any(toks, kTemporal) ? 1.0 : 0.0;

  std::size_t entities = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const unsigned char c0 = static_cast<unsigned char>(raw[i][0]);
    if (i > 0 && std::isupper(c0)) ++entities;
  }
  f[5 + std::min<std::size_t>(entities, 2)] = 1.0;

  f[8] = contains_any(toks, kProfileHints) ? 1.0 : 0.0;
  f[9] = contains_any(toks, kObservationHints) ? 1.0 : 0.0;
  f[10] = contains_any(toks, kSessionHints) ? 1.0 : 0.0;
  f[11] = (text.find('?') != std::string_view::npos || (n > 0 && contains_any({toks[0]}, kWhWords)))
              ? 1.0 : 0.0;
  f[12] = contains_any(toks, kActionVerbs) ? 1.0 : 0.0;
  f[13] = std::any_of(toks.begin(), toks.end(),
                      [](const std::string& t) { return t == "how" || t == "steps" || t == "procedure"; })
              ? 1.0 : 0.0;
  f[14] = std::any_of(text.begin(), text.end(),
                      [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; })
              ? 1.0 : 0.0;
  f[15] = 1.0;
  return phi;
}

std::vector<double> request_features(const Embedding& z, const StructuredFeatures& phi,
                                     std::size_t expected_d, std::size_t expected_f) {
  if (z.dimension() != expected_d || phi.values.size() != expected_f) {
    std::ostringstream os;
    os << "request features expect D=" << expected_d << " F=" << expected_f << ", got D="
       << z.dimension() << " F=" << phi.values.size();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
  std::vector<double> r;
  r.reserve(expected_d + expected_f);
  r.insert(r.end(), z.values().begin(), z.values().end());
  r.insert(r.end(), phi.values.begin(), phi.values.end());
  return r;
}

}  // namespace shardmemo
