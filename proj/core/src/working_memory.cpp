#include "shardmemo/working_memory.hpp"

#include <algorithm>
#include <mutex>

#include "shardmemo/error.hpp"
#include "shardmemo/scope.hpp"

namespace shardmemo {

namespace {

bool older(const WorkingEntry& a, const WorkingEntry& b) {
  return a.created_at != b.created_at ? a.created_at < b.created_at : a.entry_id < b.entry_id;
}

const char* family_suffix(Family f) {
  switch (f) {
    case Family::Profile: return "profile";
    case Family::Observation: return "obs";
    case Family::Session: return "sess";
  }
  return "?";
}

}  // namespace

WorkingMemory::WorkingMemory(std::size_t capacity_per_stream) : capacity_(capacity_per_stream) {
  if (capacity_ == 0) throw Error(ErrorCode::InvalidConfig, "working memory capacity must be >= 1");
}

void WorkingMemory::write_a(WorkingEntry entry) {
  if (entry.entry_id.empty() || entry.tenant.empty() || entry.agent.empty() || entry.session.empty()) {
    throw Error(ErrorCode::InvalidArgument, "working entry needs entry_id, tenant, agent and session");
  }
  std::unique_lock lock(mu_);
  if (entry_stream_.count(entry.entry_id)) {
    throw Error(ErrorCode::DuplicateId, "working entry '" + entry.entry_id + "' exists");
  }
  StreamKey key{entry.tenant, entry.agent, entry.session};
  auto& stream = streams_[key];
  stream.push_back(entry);
  while (stream.size() > capacity_) {
    auto victim = stream.end();
    for (auto it = stream.begin(); it != stream.end(); ++it) {
      if (!it->pinned && (victim == stream.end() || older(*it, *victim))) victim = it;
    }
    if (victim == stream.end()) {
      stream.pop_back();
      throw Error(ErrorCode::AllPinnedAtCapacity,
                  "stream " + entry.agent + "/" + entry.session + " is full of pinned entries");
    }
    entry_stream_.erase(victim->entry_id);
    stream.erase(victim);
  }
  if (std::any_of(stream.begin(), stream.end(),
                  [&](const WorkingEntry& e) { return e.entry_id == entry.entry_id; })) {
    entry_stream_.emplace(entry.entry_id, key);
  }
}

std::vector<WorkingEntry> WorkingMemory::read_a(const ScopePredicate& scope, std::size_t m) const {
  if (m == 0) return {};
  std::vector<WorkingEntry> out;
  {
    std::shared_lock lock(mu_);
    for (const auto& [key, stream] : streams_) {
      ScopeKey sk{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::nullopt, {}};
      if (!scope_eval(scope, sk)) continue;
      out.insert(out.end(), stream.begin(), stream.end());
    }
  }
  std::sort(out.begin(), out.end(), [](const WorkingEntry& a, const WorkingEntry& b) {
    if (a.pinned != b.pinned) return a.pinned;
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.entry_id < b.entry_id;
  });
  if (out.size() > m) out.resize(m);
  return out;
}

ItemId WorkingMemory::promote(const std::string& entry_id, Family family, EvidenceStore& store,
                              const Embedder& embedder) {
  WorkingEntry entry;
  {
    std::shared_lock lock(mu_);
    auto it = entry_stream_.find(entry_id);
    if (it == entry_stream_.end()) throw Error(ErrorCode::UnknownEntry, "no working entry '" + entry_id + "'");
    const auto& stream = streams_.at(it->second);
    entry = *std::find_if(stream.begin(), stream.end(),
                          [&](const WorkingEntry& e) { return e.entry_id == entry_id; });
  }
  const ItemId item_id = "wm:" + entry_id + ":" + family_suffix(family);
  if (store.find_item(item_id) != nullptr) return item_id;

  MemoryItem item;
  item.item_id = item_id;
  item.text = entry.text;
  item.embedding = embedder.embed(entry.text);
  item.scope = ScopeKey{entry.tenant, entry.agent, entry.session, std::nullopt, {}};
  item.family = family;
  item.provenance = "tierA:" + entry_id;
  item.created_at = entry.created_at;
  try {
    store.write_item(std::move(item));
  } catch (const Error& e) {
    // A concurrent promotion of the same entry won the race.
    if (e.code() != ErrorCode::DuplicateId) throw;
  }
  return item_id;
}

std::size_t WorkingMemory::stream_size(const std::string& tenant, const std::string& agent,
                                       const std::string& session) const {
  std::shared_lock lock(mu_);
  auto it = streams_.find({tenant, agent, session});
  return it == streams_.end() ? 0 : it->second.size();
}

std::size_t WorkingMemory::size() const {
  std::shared_lock lock(mu_);
  return entry_stream_.size();
}

std::vector<WorkingEntry> WorkingMemory::all_entries() const {
  std::shared_lock lock(mu_);
  std::vector<WorkingEntry> out;
  for (const auto& [_, stream] : streams_) out.insert(out.end(), stream.begin(), stream.end());
  return out;
}

}  // namespace shardmemo
