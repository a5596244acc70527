#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "graphex/types.hpp"

namespace graphex {

// A user's positively interacted items within one session.
struct SessionRecord {
  UserId user = 0;
  std::vector<ItemId> positive_items;
  double timestamp = 0.0;
};

struct Neighbor {
  std::size_t index;
  std::uint32_t weight;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Item-item co-interaction graph. Nodes carry a feature vector; an edge's
// weight counts the sessions in which both endpoints were positive.
//
// Nodes are addressed either by ItemId or by their dense insertion index.
// Mutations happen in batches (apply_sessions); each batch bumps version().
class ItemGraph {
 public:
  // Sessions longer than this only contribute pairs among their first
  // kMaxSessionPositives items.
  static constexpr std::size_t kMaxSessionPositives = 50;

  // Feature dimension is fixed by the first add_item call.
  ItemGraph() = default;
  explicit ItemGraph(std::size_t feature_dim) : feature_dim_(feature_dim) {}

  void add_item(ItemId id, Vector features);

  // One batch containing a single session. Returns the pair increments.
  std::size_t add_session_edges(const SessionRecord& session);

  // Applies every session as one batch. All items are validated before any
  // edge changes; on error the graph is untouched.
  std::size_t apply_sessions(std::span<const SessionRecord> sessions);

  // Up to `fanout` distinct nodes visited by `fanout` weight-proportional
  // random walks of `walk_length` steps from `id`, in first-visit order.
  // The start node is never returned.
  std::vector<ItemId> sample_neighbors(ItemId id, std::size_t fanout,
                                       std::size_t walk_length,
                                       std::uint64_t rng_seed) const;
  std::vector<std::size_t> sample_neighbor_indices(
      std::size_t index, std::size_t fanout, std::size_t walk_length,
      std::uint64_t rng_seed) const;

  bool contains(ItemId id) const { return index_.contains(id); }
  std::size_t index_of(ItemId id) const;
  ItemId id_at(std::size_t index) const { return ids_[index]; }
  std::span<const ItemId> ids() const { return ids_; }

  const Vector& features(ItemId id) const { return features_[index_of(id)]; }
  const Vector& features_at(std::size_t index) const {
    return features_[index];
  }

  std::span<const Neighbor> neighbors_at(std::size_t index) const {
    return adjacency_[index];
  }
  std::uint32_t weight(ItemId a, ItemId b) const;

  std::size_t node_count() const { return ids_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::uint64_t version() const { return version_; }
  bool empty() const { return ids_.empty(); }

  // Throws Error describing the first violated structural invariant.
  void check_invariants() const;

  friend bool operator==(const ItemGraph& a, const ItemGraph& b);

 private:
  friend ItemGraph read_snapshot(std::istream& in);

  void increment(std::size_t a, std::size_t b);

  std::size_t feature_dim_ = 0;
  std::vector<ItemId> ids_;
  std::unordered_map<ItemId, std::size_t> index_;
  std::vector<Vector> features_;
  // Sorted by neighbor index.
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::uint64_t> total_weight_;
  std::size_t edge_count_ = 0;
  std::uint64_t version_ = 0;
};

// Tab-separated text snapshot: header "nodes edges dim version", one line per
// node (id then features), one line per edge (id_i id_j weight) with i < j.
void write_snapshot(const ItemGraph& graph, std::ostream& out);
ItemGraph read_snapshot(std::istream& in);
void save_snapshot(const ItemGraph& graph, const std::filesystem::path& path);
ItemGraph load_snapshot(const std::filesystem::path& path);

}  // namespace graphex
