#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "shardmemo/types.hpp"

namespace shardmemo {

enum class IndexKind { ExactFlat, GraphApprox };

std::string to_string(IndexKind k);
IndexKind index_kind_from_string(const std::string& s);

struct ScoredItem {
  ItemId item_id;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

/// Descending score, then ascending item id.
bool ranks_before(const ScoredItem& a, const ScoredItem& b);

struct ScanStats {
  std::size_t vectors_scored = 0;
};

// Vectors are assumed unit length; score is the dot product.
class VectorIndex {
 public:
  virtual ~VectorIndex() = default;

  virtual IndexKind kind() const = 0;
  virtual std::size_t size() const = 0;
  virtual void add(const ItemId& id, std::span<const double> vec) = 0;
  virtual std::vector<ScoredItem> search(std::span<const double> query, std::size_t n,
                                         ScanStats& stats) const = 0;
  virtual std::unique_ptr<VectorIndex> clone() const = 0;
};

class ExactFlatIndex final : public VectorIndex {
 public:
  explicit ExactFlatIndex(std::size_t dim) : dim_(dim) {}

  IndexKind kind() const override { return IndexKind::ExactFlat; }
  std::size_t size() const override { return ids_.size(); }
  void add(const ItemId& id, std::span<const double> vec) override;
  std::vector<ScoredItem> search(std::span<const double> query, std::size_t n,
                                 ScanStats& stats) const override;
  std::unique_ptr<VectorIndex> clone() const override {
    return std::make_unique<ExactFlatIndex>(*this);
  }

 private:
  std::size_t dim_;
  std::vector<ItemId> ids_;
  std::vector<double> data_;  // row-major, size() x dim_
};

struct GraphParams {
  std::size_t max_degree = 16;
  std::size_t ef_construction = 64;
  std::size_t ef_search = 64;

  bool operator==(const GraphParams&) const = default;
};

// Single-layer navigable small-world graph. Greedy beam search from a fixed
// entry node; `vectors_scored` counts distinct nodes whose score was computed.
class GraphApproxIndex final : public VectorIndex {
 public:
  GraphApproxIndex(std::size_t dim, GraphParams params = {}) : dim_(dim), params_(params) {}

  IndexKind kind() const override { return IndexKind::GraphApprox; }
  std::size_t size() const override { return ids_.size(); }
  void add(const ItemId& id, std::span<const double> vec) override;
  std::vector<ScoredItem> search(std::span<const double> query, std::size_t n,
                                 ScanStats& stats) const override;
  std::unique_ptr<VectorIndex> clone() const override {
    return std::make_unique<GraphApproxIndex>(*this);
  }

  const std::vector<std::vector<std::size_t>>& adjacency() const { return neighbors_; }
  void set_adjacency(std::vector<std::vector<std::size_t>> adj);

 private:
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::vector<std::size_t> beam_search(std::span<const double> query, std::size_t ef,
                                       std::size_t& scored) const;
  void prune(std::size_t node);

  std::size_t dim_;
  GraphParams params_;
  std::vector<ItemId> ids_;
  std::vector<double> data_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

std::unique_ptr<VectorIndex> make_index(IndexKind kind, std::size_t dim, GraphParams graph = {});

}  // namespace shardmemo
