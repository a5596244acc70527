#pragma once

#include <cstddef>
#include <span>
#include <unordered_set>
#include <vector>

#include "graphex/embedding.hpp"

namespace graphex {

struct Candidate {
  ItemId item;
  double match_score;  // cosine in [-1, 1]

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct CandidateSet {
  std::vector<Candidate> items;  // descending score, ties by ascending id
  std::size_t source_round = 0;
};

// Exact full scan: each non-excluded table item scores the max cosine over
// the history items present in the table; the top `n` are returned.
// Throws ColdStartError when no history item has an embedding, and
// InvalidArgument for an empty table or n == 0.
CandidateSet match_candidates(std::span<const ItemId> history_positives,
                              const EmbeddingTable& table, std::size_t n,
                              const std::unordered_set<ItemId>& exclusions,
                              std::size_t round = 0);

}  // namespace graphex
