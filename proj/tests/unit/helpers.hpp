#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "shardmemo/embedding.hpp"
#include "shardmemo/evidence_store.hpp"
#include "shardmemo/types.hpp"

namespace testutil {

using namespace shardmemo;

inline ScopeKey key(std::string tenant, std::string agent, std::optional<std::string> session = std::nullopt,
                    std::optional<std::string> domain = std::nullopt, std::set<std::string> perms = {}) {
  return ScopeKey{std::move(tenant), std::move(agent), std::move(session), std::move(domain), std::move(perms)};
}

inline Embedding random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return Embedding(std::move(v)).normalized();
}

inline MemoryItem item(std::string id, Embedding e, ScopeKey k, Family f, std::int64_t ts = 0) {
  MemoryItem m;
  m.item_id = std::move(id);
  m.text = "text of " + m.item_id;
  m.embedding = std::move(e);
  m.scope = std::move(k);
  m.family = f;
  m.provenance = "test";
  m.created_at = ts;
  return m;
}

inline MemoryItem text_item(const Embedder& emb, std::string id, std::string text, ScopeKey k, Family f,
                            std::int64_t ts = 0) {
  MemoryItem m = item(std::move(id), emb.embed(text), std::move(k), f, ts);
  m.text = std::move(text);
  return m;
}

inline Embedding vec(std::vector<double> v) { return Embedding(std::move(v)); }

}  // namespace testutil
