#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "graphex/embedding.hpp"
#include "graphex/graph_store.hpp"
#include "graphex/metrics.hpp"
#include "graphex/personalization.hpp"
#include "graphex/rerank_dpp.hpp"
#include "graphex/retrieval.hpp"

namespace graphex {

enum class RerankerVariant {
  kNone,             // top-k by rank score
  kRule,             // per-topic cap over the ranked list
  kFastDppSemantic,  // DPP, topic-label similarity, fixed f = 0.5
  kPDpp,             // DPP, topic-label similarity, static entropy-derived f
  kOurs,             // DPP, graph-embedding similarity, real-time f_u
};

std::string_view to_string(RerankerVariant v);
std::optional<RerankerVariant> parse_reranker(std::string_view name);

struct FeedbackModel {
  double relevance_weight = 4.0;  // a
  double novelty_weight = 2.0;    // b
  double position_penalty = 0.1;
};

// Independent RNG streams. Each defaults to a value derived from `base`.
struct SeedSet {
  std::uint64_t base = 1;
  std::optional<std::uint64_t> catalog, users, ranker, feedback, walks, labels;

  std::uint64_t catalog_seed() const;
  std::uint64_t users_seed() const;
  std::uint64_t ranker_seed() const;
  std::uint64_t feedback_seed() const;
  std::uint64_t walks_seed() const;
  std::uint64_t labels_seed() const;
};

struct ExperimentConfig {
  std::size_t catalog_size = 2000;
  std::size_t topic_count = 20;
  std::size_t feature_dim = 16;
  // Per-coordinate noise around the topic centroid, scaled by 1/sqrt(dim).
  double topic_noise = 0.7;
  // Fraction of items whose observed topic label is replaced by another.
  double clickbait_fraction = 0.0;
  // Fraction of items absent from the graph until first positively
  // interacted; they are reachable only through random candidates.
  double unseen_fraction = 0.0;

  std::size_t user_count = 500;
  double user_noise = 0.5;
  std::size_t warmup_sessions = 3;

  std::size_t rounds = 10;
  std::size_t feed_size = 10;
  std::size_t retrieval_size = 500;
  std::size_t rank_size = 50;
  std::size_t random_candidates = 0;
  double ranker_noise = 0.1;
  RerankerVariant reranker = RerankerVariant::kOurs;
  bool graph_update = true;
  std::size_t exclusion_rounds = 3;
  std::size_t window_rounds = 5;
  std::size_t history_size = 20;
  std::size_t rule_topic_cap = 2;
  double semantic_similarity = 0.9;
  std::size_t rd_max_items = 200;
  // Also measure ILAD/RD on item features (RoundReport *_features).
  bool feature_metrics = false;
  std::size_t threads = 1;

  FeedbackModel feedback;
  PropensityConfig propensity;
  RerankConfig rerank;
  TrainConfig train;
  SeedSet seeds;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct CatalogItem {
  ItemId id;
  Vector features;
  std::size_t topic;
  std::size_t observed_topic;  // differs from topic for clickbait items
};

struct Catalog {
  std::vector<CatalogItem> items;  // items[i].id == i
  std::vector<Vector> centroids;

  const CatalogItem& item(ItemId id) const { return items.at(id); }
  std::size_t size() const { return items.size(); }
};

struct SyntheticUser {
  UserId user = 0;
  std::vector<Vector> interest_centers;  // unit-norm, feature space
  double appetite = 0.0;                 // beta in [0, 1]
  double noise = 0.0;                    // logistic noise scale
  UserState state;                       // window holds every positive
  double static_propensity = 0.5;        // p-DPP baseline
};

Catalog gen_catalog(const ExperimentConfig& config);
std::vector<SyntheticUser> gen_users(const ExperimentConfig& config,
                                     const Catalog& catalog);

// Unit-norm item features as a lookup table.
EmbeddingTable feature_table(const Catalog& catalog);

// max cosine between `item` and the user's interest centers.
double true_relevance(const SyntheticUser& user, const Eigen::Ref<const Vector>& item);

// Logit of the positive probability without noise.
double feedback_logit(const SyntheticUser& user, ItemId item, std::size_t rank,
                      const EmbeddingTable& features,
                      std::span<const ItemId> recent_window,
                      const FeedbackModel& model);

std::vector<ItemId> user_feedback(const SyntheticUser& user,
                                  std::span<const ItemId> feed,
                                  const EmbeddingTable& features,
                                  std::span<const ItemId> recent_window,
                                  const FeedbackModel& model,
                                  std::uint64_t seed);

struct UserRound {
  std::vector<ItemId> candidates;  // retrieval output (+ random source)
  std::vector<ItemId> ranked;      // mock-ranker top rank_size
  std::vector<double> rank_scores;
  std::vector<ItemId> feed;
  std::vector<ItemId> positives;
  double propensity = 0.5;
  bool cold_start = false;
};

struct SimulationState {
  Catalog catalog;
  EmbeddingTable features;
  std::vector<SyntheticUser> users;
  ItemGraph graph;
  LayerWeights weights;
  EmbeddingTable table;
  // Per user: feeds of the last exclusion_rounds rounds, newest last.
  std::vector<std::deque<std::vector<ItemId>>> recent_feeds;
  std::unordered_set<ItemId> exposed;
  std::size_t round = 0;
  std::vector<UserRound> last_round;
};

// Catalog, users, warm-up sessions and initial embedding training.
SimulationState initialize(const ExperimentConfig& config);

// Embedding table covering the whole catalog: graph embeddings, plus
// features-only inference for items not yet in the graph.
EmbeddingTable catalog_table(const SimulationState& state);

// Applies the configured reranker to one ranked list.
std::vector<ItemId> rerank_feed(const ExperimentConfig& config,
                                const SimulationState& state,
                                const EmbeddingTable& round_table,
                                std::span<const ItemId> ranked,
                                std::span<const double> rank_scores,
                                double propensity);

RoundReport run_round(SimulationState& state, const ExperimentConfig& config);

struct ExperimentResult {
  std::vector<RoundReport> reports;
  SimulationState final_state;
};

// Runs config.rounds rounds. When `out_dir` is given, writes metrics.csv,
// graph.tsv, embeddings.tsv and weights.tsv there; on failure the CSV gets
// a "# FAILED" marker line and the exception propagates.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = {});

}  // namespace graphex
