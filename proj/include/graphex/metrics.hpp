#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "graphex/embedding.hpp"

namespace graphex {

// Mean of (1 - cosine) over unordered distinct pairs of one list.
// Throws InsufficientData for lists shorter than two.
double mean_pairwise_distance(std::span<const ItemId> items,
                              const EmbeddingTable& table);

// Intra-list average distance: mean over users of mean_pairwise_distance.
// Lists with fewer than two items are skipped; throws InsufficientData when
// every list is skipped.
double ilad(std::span<const std::vector<ItemId>> lists,
            const EmbeddingTable& table);

// Same shape as ilad over retrieval candidates. Lists longer than
// `max_items` are reduced to a seeded random subset first.
double rd(std::span<const std::vector<ItemId>> candidate_sets,
          const EmbeddingTable& table, std::size_t max_items = 200,
          std::uint64_t seed = 0);

double coverage(const std::unordered_set<ItemId>& exposed,
                std::size_t catalog_size);

struct RoundReport {
  std::size_t round = 0;
  double ilad = 0.0;
  double rd = 0.0;
  double coverage = 0.0;
  std::size_t positives = 0;
  std::size_t graph_edges = 0;
  // Same metrics measured on item features instead of graph embeddings.
  // Not part of the CSV.
  double ilad_features = 0.0;
  double rd_features = 0.0;
};

inline constexpr const char* kMetricsCsvHeader =
    "round,ilad,rd,coverage,positives,graph_edges";

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const RoundReport& report);

}  // namespace graphex
