#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "graphex/graph_store.hpp"
#include "graphex/types.hpp"

namespace graphex {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Unit-norm item vectors keyed by ItemId, stored densely in insertion order.
class EmbeddingTable {
 public:
  static constexpr double kNormTolerance = 1e-6;

  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::uint64_t graph_version)
      : dim_(dim), graph_version_(graph_version) {}

  // Throws InvalidArgument on duplicate id, wrong dimension, non-finite
  // entries or a norm outside 1 +- kNormTolerance.
  void insert(ItemId id, const Eigen::Ref<const Vector>& v);

  bool contains(ItemId id) const { return index_.contains(id); }
  std::size_t index_of(ItemId id) const;
  std::span<const ItemId> ids() const { return ids_; }

  Eigen::Map<const Vector> vector(ItemId id) const { return row(index_of(id)); }
  Eigen::Map<const Vector> row(std::size_t index) const {
    return Eigen::Map<const Vector>(data_.data() + index * dim_,
                                    static_cast<Eigen::Index>(dim_));
  }
  // size() x dim() view over all rows.
  Eigen::Map<const RowMatrix> matrix() const {
    return Eigen::Map<const RowMatrix>(data_.data(),
                                       static_cast<Eigen::Index>(size()),
                                       static_cast<Eigen::Index>(dim_));
  }

  double cosine(ItemId a, ItemId b) const { return vector(a).dot(vector(b)); }

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return ids_.empty(); }
  std::uint64_t graph_version() const { return graph_version_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t dim_ = 0;
  std::uint64_t graph_version_ = 0;
  std::vector<ItemId> ids_;
  std::unordered_map<ItemId, std::size_t> index_;
  std::vector<double> data_;
};

enum class Activation { kIdentity, kRelu };

struct Layer {
  // out_dim x (2 * in_dim); the left half multiplies the node's own
  // representation, the right half the aggregated neighborhood.
  Matrix weight;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()) / 2; }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

struct LayerWeights {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
  // Throws InvalidArgument unless shapes compose and entries are finite.
  void validate() const;

  friend bool operator==(const LayerWeights& a, const LayerWeights& b);
};

struct TrainConfig {
  // Output dimension of each layer; the layer count is dims.size().
  std::vector<std::size_t> dims{32, 32};
  // Neighbors sampled per node at each layer.
  std::vector<std::size_t> fanouts{10, 10};
  std::size_t walk_length = 3;
  // Random-walk co-visited context nodes drawn per node and epoch.
  std::size_t context_size = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 30;
  // Epochs used when warm-starting from previous weights.
  std::size_t incremental_epochs = 3;
  bool full_retrain = false;
  double learning_rate = 0.01;
  // Cosine scores are multiplied by this before the logistic loss.
  double temperature = 5.0;
  std::uint64_t seed = 1;
  // >1 accumulates pair gradients on worker threads.
  std::size_t threads = 1;

  void validate() const;
};

struct TrainResult {
  LayerWeights weights;
  EmbeddingTable table;
  std::vector<double> epoch_losses;
};

// Element-wise mean; an empty list yields the zero vector of `dim`.
Vector aggregate_neighbors(std::span<const Vector> neighbor_embeddings,
                           std::size_t dim);

// activation(W_layer * [node ; neighborhood])
Vector propagate(const Eigen::Ref<const Vector>& node_embedding,
                 const Eigen::Ref<const Vector>& neighborhood_embedding,
                 const LayerWeights& weights, std::size_t layer);

// Deterministic unit vector substituted for zero-norm outputs.
Vector fallback_unit_vector(ItemId id, std::size_t dim);

// L2-normalizes `v`, replacing a (near) zero vector by the id fallback.
Vector normalize_or_fallback(Vector v, ItemId id);

LayerWeights init_weights(std::size_t feature_dim, const TrainConfig& config);

// Unsupervised skip-gram training with negative sampling. Starts from fresh
// weights and runs config.epochs.
TrainResult train_unsupervised(const ItemGraph& graph,
                               const TrainConfig& config);

// Warm start from `previous` for config.incremental_epochs, unless
// config.full_retrain is set.
TrainResult train_incremental(const ItemGraph& graph, const TrainConfig& config,
                              const LayerWeights& previous);

// Inference pass over every node with the deterministic inference
// neighborhoods for (config.seed, graph.version()).
EmbeddingTable embed_graph(const ItemGraph& graph, const LayerWeights& weights,
                           const TrainConfig& config);

// Recomputes one node's embedding through its own sampled computation tree.
// Matches the corresponding embed_graph row.
Vector embed_node(const ItemGraph& graph, const LayerWeights& weights,
                  const TrainConfig& config, ItemId id);

// Embedding of an item from features alone (empty neighborhoods at every
// layer). `id` only seeds the zero-norm fallback.
Vector infer_unseen(const Eigen::Ref<const Vector>& features,
                    const LayerWeights& weights, ItemId id);

void write_table(const EmbeddingTable& table, std::ostream& out);
EmbeddingTable read_table(std::istream& in);
void save_table(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_table(const std::filesystem::path& path);

void write_weights(const LayerWeights& weights, std::ostream& out);
LayerWeights read_weights(std::istream& in);
void save_weights(const LayerWeights& weights, const std::filesystem::path& path);
LayerWeights load_weights(const std::filesystem::path& path);

}  // namespace graphex
