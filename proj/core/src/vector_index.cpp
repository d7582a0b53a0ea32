#include "shardmemo/vector_index.hpp"

#include <algorithm>
#include <queue>

#include "shardmemo/embedding.hpp"
#include "shardmemo/error.hpp"

namespace shardmemo {

std::string to_string(IndexKind k) { return k == IndexKind::ExactFlat ? "ExactFlat" : "GraphApprox"; }

IndexKind index_kind_from_string(const std::string& s) {
  if (s == "ExactFlat") return IndexKind::ExactFlat;
  if (s == "GraphApprox") return IndexKind::GraphApprox;
  throw Error(ErrorCode::ParseError, "unknown index kind '" + s + "'");
}

bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item_id < b.item_id;
}

namespace {

void check_dim(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw Error(ErrorCode::DimensionMismatch,
                "index dimension " + std::to_string(expected) + ", vector " + std::to_string(got));
  }
}

void keep_top(std::vector<ScoredItem>& items, std::size_t n) {
  if (items.size() > n) {
    std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n), items.end(),
                      ranks_before);
    items.resize(n);
  } else {
    std::sort(items.begin(), items.end(), ranks_before);
  }
}

}  // namespace

void ExactFlatIndex::add(const ItemId& id, std::span<const double> vec) {
  check_dim(dim_, vec.size());
  ids_.push_back(id);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::vector<ScoredItem> ExactFlatIndex::search(std::span<const double> query, std::size_t n,
                                               ScanStats& stats) const {
  check_dim(dim_, query.size());
  std::vector<ScoredItem> all;
  all.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    all.push_back({ids_[i], dot(query, {data_.data() + i * dim_, dim_})});
  }
  stats.vectors_scored += ids_.size();
  keep_top(all, n);
  return all;
}

std::vector<std::size_t> GraphApproxIndex::beam_search(std::span<const double> query,
                                                       std::size_t ef,
                                                       std::size_t& scored) const {
  using Entry = std::pair<double, std::size_t>;
  // Best-first frontier (max-heap) and bounded result set (min-heap).
  auto worse = [](const Entry& a, const Entry& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  std::priority_queue<Entry> frontier;
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> results(worse);
  std::vector<char> visited(ids_.size(), 0);

  const std::size_t entry = 0;
  const double s0 = dot(query, row(entry));
  ++scored;
  visited[entry] = 1;
  frontier.push({s0, entry});
  results.push({s0, entry});

  while (!frontier.empty()) {
    const auto [score, node] = frontier.top();
    frontier.pop();
    if (results.size() >= ef && score < results.top().first) break;
    for (std::size_t nb : neighbors_[node]) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      const double s = dot(query, row(nb));
      ++scored;
      if (results.size() < ef || s > results.top().first) {
        frontier.push({s, nb});
        results.push({s, nb});
        if (results.size() > ef) results.pop();
      }
    }
  }
  std::vector<Entry> out;
  while (!results.empty()) {
    out.push_back(results.top());
    results.pop();
  }
  std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::size_t> nodes;
  nodes.reserve(out.size());
  for (const auto& e : out) nodes.push_back(e.second);
  return nodes;
}

void GraphApproxIndex::prune(std::size_t node) {
  auto& nbs = neighbors_[node];
  const std::size_t cap = 2 * params_.max_degree;
  if (nbs.size() <= cap) return;
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(nbs.size());
  for (std::size_t nb : nbs) scored.push_back({dot(row(node), row(nb)), nb});
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  scored.resize(cap);
  nbs.clear();
  for (const auto& s : scored) nbs.push_back(s.second);
}

void GraphApproxIndex::add(const ItemId& id, std::span<const double> vec) {
  check_dim(dim_, vec.size());
  std::vector<std::size_t> nearest;
  if (!ids_.empty()) {
    std::size_t scored = 0;
    nearest = beam_search(vec, params_.ef_construction, scored);
    if (nearest.size() > params_.max_degree) nearest.resize(params_.max_degree);
  }
  const std::size_t node = ids_.size();
  ids_.push_back(id);
  data_.insert(data_.end(), vec.begin(), vec.end());
  neighbors_.emplace_back();
  for (std::size_t nb : nearest) {
    neighbors_[node].push_back(nb);
    neighbors_[nb].push_back(node);
    prune(nb);
  }
}

std::vector<ScoredItem> GraphApproxIndex::search(std::span<const double> query, std::size_t n,
                                                 ScanStats& stats) const {
  check_dim(dim_, query.size());
  if (ids_.empty() || n == 0) return {};
  std::size_t scored = 0;
  const auto nodes = beam_search(query, std::max(n, params_.ef_search), scored);
  stats.vectors_scored += scored;
  std::vector<ScoredItem> out;
  out.reserve(nodes.size());
  for (std::size_t i : nodes) out.push_back({ids_[i], dot(query, row(i))});
  keep_top(out, n);
  return out;
}

void GraphApproxIndex::set_adjacency(std::vector<std::vector<std::size_t>> adj) {
  if (adj.size() != ids_.size()) {
    throw Error(ErrorCode::ParseError, "graph adjacency size does not match entry count");
  }
  for (const auto& nbs : adj) {
    for (std::size_t nb : nbs) {
      if (nb >= ids_.size()) throw Error(ErrorCode::ParseError, "graph neighbor out of range");
    }
  }
  neighbors_ = std::move(adj);
}

std::unique_ptr<VectorIndex> make_index(IndexKind kind, std::size_t dim, GraphParams graph) {
  if (kind == IndexKind::ExactFlat) return std::make_unique<ExactFlatIndex>(dim);
  return std::make_unique<GraphApproxIndex>(dim, graph);
}

}  // namespace shardmemo
