#include "shardmemo/evidence_store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "shardmemo/error.hpp"
#include "shardmemo/scope.hpp"

namespace shardmemo {

namespace {

std::size_t family_index(Family f) { return static_cast<std::size_t>(f); }

const char* family_tag(Family f) {
  switch (f) {
    case Family::Profile: return "profile";
    case Family::Observation: return "obs";
    case Family::Session: return "sess";
  }
  return "?";
}

}  // namespace

std::vector<double> ShardSummary::as_vector() const {
  std::vector<double> v(centroid);
  v.insert(v.end(), family_onehot.begin(), family_onehot.end());
  v.push_back(log_size);
  return v;
}

ShardId ShardMap::assign(const ScopeKey& key, Family family) const {
  std::string id = key.tenant + "/" + key.agent + "/" + family_tag(family);
  if (key.session) id += ":" + *key.session;
  if (key.domain) id += "@" + *key.domain;
  for (const auto& perm : key.permission_tags) id += "+" + perm;
  return id;
}

Shard::Shard(ShardId id, Family family, ScopeKey partition, std::size_t dim,
             std::unique_ptr<VectorIndex> index)
    : id_(std::move(id)),
      family_(family),
      partition_(std::move(partition)),
      dim_(dim),
      index_(std::move(index)) {}

std::size_t Shard::size() const {
  std::shared_lock lock(mu_);
  return items_.size();
}

std::int64_t Shard::latest_timestamp() const {
  std::shared_lock lock(mu_);
  return latest_ts_;
}

bool Shard::summary_dirty() const {
  std::shared_lock lock(mu_);
  return dirty_;
}

std::vector<const MemoryItem*> Shard::items() const {
  std::shared_lock lock(mu_);
  std::vector<const MemoryItem*> out;
  out.reserve(items_.size());
  for (const auto& it : items_) out.push_back(&it);
  return out;
}

const MemoryItem* Shard::find(const ItemId& id) const {
  std::shared_lock lock(mu_);
  auto it = positions_.find(id);
  return it == positions_.end() ? nullptr : &items_[it->second];
}

std::vector<ScoredItem> Shard::search(std::span<const double> query, std::size_t n,
                                      ScanStats& stats) const {
  std::shared_lock lock(mu_);
  return index_->search(query, n, stats);
}

void Shard::append(MemoryItem item) {
  std::unique_lock lock(mu_);
  index_->add(item.item_id, item.embedding.values());
  latest_ts_ = items_.empty() ? item.created_at : std::max(latest_ts_, item.created_at);
  positions_.emplace(item.item_id, items_.size());
  items_.push_back(std::move(item));
  dirty_ = true;
}

void Shard::replace_index(std::unique_ptr<VectorIndex> index) {
  std::unique_lock lock(mu_);
  if (index->size() != items_.size()) {
    throw Error(ErrorCode::ParseError, "restored index size does not match shard " + id_);
  }
  index_ = std::move(index);
}

IndexKind Shard::index_kind() const {
  std::shared_lock lock(mu_);
  return index_->kind();
}

std::unique_ptr<VectorIndex> Shard::index_copy() const {
  std::shared_lock lock(mu_);
  return index_->clone();
}

ShardSummary Shard::compute_summary_locked() const {
  ShardSummary s;
  s.centroid.assign(dim_, 0.0);
  for (const auto& it : items_) {
    const auto& v = it.embedding.values();
    for (std::size_t i = 0; i < dim_; ++i) s.centroid[i] += v[i];
  }
  if (!items_.empty()) {
    for (double& x : s.centroid) x /= static_cast<double>(items_.size());
  }
  s.family_onehot[family_index(family_)] = 1.0;
  s.log_size = std::log1p(static_cast<double>(items_.size()));
  return s;
}

ShardSummary Shard::summary() const {
  {
    std::shared_lock lock(mu_);
    if (!dirty_) return summary_;
  }
  std::unique_lock lock(mu_);
  if (dirty_) {
    summary_ = compute_summary_locked();
    dirty_ = false;
  }
  return summary_;
}

ShardSummary Shard::refresh_summary() {
  std::unique_lock lock(mu_);
  summary_ = compute_summary_locked();
  dirty_ = false;
  return summary_;
}

EvidenceStore::EvidenceStore(StoreConfig config, ShardMap map) : config_(config), map_(map) {
  if (config_.dim == 0) throw Error(ErrorCode::InvalidConfig, "store dimension must be positive");
}

void EvidenceStore::validate(const MemoryItem& item) const {
  auto malformed = [&](const std::string& why) {
    throw Error(ErrorCode::MalformedItem, "item '" + item.item_id + "': " + why);
  };
  if (item.item_id.empty()) malformed("missing item_id");
  if (std::any_of(item.item_id.begin(), item.item_id.end(),
                  [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; })) {
    malformed("item_id contains whitespace");
  }
  if (item.text.empty()) malformed("missing text");
  if (!is_valid_identifier(item.scope.tenant)) malformed("missing or invalid tenant");
  if (!is_valid_identifier(item.scope.agent)) malformed("missing or invalid agent");
  if (item.scope.session && !is_valid_identifier(*item.scope.session)) malformed("invalid session");
  if (item.scope.domain && !is_valid_identifier(*item.scope.domain)) malformed("invalid domain");
  for (const auto& p : item.scope.permission_tags) {
    if (!is_valid_identifier(p)) malformed("invalid permission tag '" + p + "'");
  }
  if (item.embedding.dimension() != config_.dim) {
    malformed("embedding dimension " + std::to_string(item.embedding.dimension()) + " != " +
              std::to_string(config_.dim));
  }
  if (!(item.embedding.norm() > 0.0)) malformed("zero embedding");
}

ShardId EvidenceStore::write_item(MemoryItem item) {
  validate(item);
  if (std::abs(item.embedding.norm() - 1.0) > 1e-12) item.embedding = item.embedding.normalized();
  const ShardId sid = map_.assign(item.scope, item.family);

  Shard* target = nullptr;
  {
    std::unique_lock lock(mu_);
    if (item_shard_.count(item.item_id)) {
      throw Error(ErrorCode::DuplicateId, "item '" + item.item_id + "' already stored");
    }
    auto it = shards_.find(sid);
    if (it == shards_.end()) {
      auto shard = std::make_unique<Shard>(sid, item.family, item.scope, config_.dim,
                                           make_index(config_.index_kind, config_.dim, config_.graph));
      by_tenant_[item.scope.tenant].push_back(shard.get());
      it = shards_.emplace(sid, std::move(shard)).first;
    }
    target = it->second.get();
    if (target->partition() != item.scope || target->family() != item.family) {
      throw Error(ErrorCode::CrossScopeRejected,
                  "item '" + item.item_id + "' does not match partition of shard " + sid);
    }
    item_shard_.emplace(item.item_id, target);
  }
  target->append(std::move(item));
  return sid;
}

std::vector<ShardId> EvidenceStore::write_batch(std::vector<MemoryItem> items) {
  std::vector<ShardId> out;
  out.reserve(items.size());
  for (auto& it : items) out.push_back(write_item(std::move(it)));
  flush();
  return out;
}

void EvidenceStore::flush() {
  std::shared_lock lock(mu_);
  for (auto& [id, shard] : shards_) {
    if (shard->summary_dirty()) shard->refresh_summary();
  }
}

std::vector<ShardId> EvidenceStore::shard_ids() const {
  std::shared_lock lock(mu_);
  std::vector<ShardId> ids;
  ids.reserve(shards_.size());
  for (const auto& [id, _] : shards_) ids.push_back(id);
  return ids;
}

std::vector<ShardId> EvidenceStore::eligible_shards(const ScopePredicate& pred) const {
  std::shared_lock lock(mu_);
  std::vector<ShardId> out;
  auto it = by_tenant_.find(pred.required_tenant);
  if (it == by_tenant_.end()) return out;
  for (const Shard* s : it->second) {
    if (scope_eval(pred, s->partition(), s->family())) out.push_back(s->id());
  }
  std::sort(out.begin(), out.end());
  return out;
}

const Shard& EvidenceStore::shard(const ShardId& id) const {
  std::shared_lock lock(mu_);
  auto it = shards_.find(id);
  if (it == shards_.end()) throw Error(ErrorCode::UnknownShard, "no shard '" + id + "'");
  return *it->second;
}

Shard& EvidenceStore::shard_mut(const ShardId& id) {
  return const_cast<Shard&>(static_cast<const EvidenceStore&>(*this).shard(id));
}

bool EvidenceStore::has_shard(const ShardId& id) const {
  std::shared_lock lock(mu_);
  return shards_.count(id) > 0;
}

ShardSearchResult EvidenceStore::shard_search(const ShardId& id, std::span<const double> query,
                                              std::size_t n) const {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "shard_search needs n >= 1");
  const Shard& s = shard(id);
  ScanStats stats;
  ShardSearchResult r;
  r.hits = s.search(query, n, stats);
  r.vec_scan = stats.vectors_scored;
  return r;
}

ShardSummary EvidenceStore::refresh_summary(const ShardId& id) { return shard_mut(id).refresh_summary(); }

ShardSummary EvidenceStore::summary(const ShardId& id) const { return shard(id).summary(); }

double EvidenceStore::estimate_cost(const ShardId& id) const {
  const Shard& target = shard(id);
  std::shared_lock lock(mu_);
  if (item_shard_.empty() || shards_.empty()) return 0.0;
  const double mean = static_cast<double>(item_shard_.size()) / static_cast<double>(shards_.size());
  return static_cast<double>(target.size()) / mean;
}

const MemoryItem* EvidenceStore::find_item(const ItemId& id) const {
  const Shard* s = nullptr;
  {
    std::shared_lock lock(mu_);
    auto it = item_shard_.find(id);
    if (it == item_shard_.end()) return nullptr;
    s = it->second;
  }
  return s->find(id);
}

std::size_t EvidenceStore::size() const {
  std::shared_lock lock(mu_);
  return item_shard_.size();
}

std::size_t EvidenceStore::shard_count() const {
  std::shared_lock lock(mu_);
  return shards_.size();
}

void EvidenceStore::restore_index(const ShardId& id, std::unique_ptr<VectorIndex> index) {
  if (index->kind() != config_.index_kind) {
    throw Error(ErrorCode::ParseError, "restored index kind does not match store config");
  }
  shard_mut(id).replace_index(std::move(index));
}

}  // namespace shardmemo
