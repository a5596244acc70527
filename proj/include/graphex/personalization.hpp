#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "graphex/embedding.hpp"

namespace graphex {

struct TimedItem {
  ItemId item;
  double timestamp;
};

struct PopulationStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

struct PropensityConfig {
  double f_min = 0.05;
  double f_max = 0.95;
  // Value used for users with fewer than two windowed items.
  double neutral = 0.5;
  // Use mean(1 - cosine) for s_u instead of mean cosine.
  bool literal_eq2 = false;
};

struct UserState {
  UserId user = 0;
  std::vector<TimedItem> window;  // sorted by timestamp
  double s_u = 0.0;
  double f_u = 0.5;
  bool has_similarity = false;
  double last_update = 0.0;
};

// Items with timestamp in (now - horizon, now], order preserved.
std::vector<ItemId> window_filter(std::span<const TimedItem> history,
                                  double now, double horizon);

// Mean cosine over unordered distinct pairs of the items that have
// embeddings. Throws InsufficientData with fewer than two such items.
double mean_pairwise_similarity(std::span<const ItemId> items,
                                const EmbeddingTable& table);

// The s_u statistic under `config` (similarity, or distance when
// literal_eq2 is set).
double user_similarity(std::span<const ItemId> items,
                       const EmbeddingTable& table,
                       const PropensityConfig& config);

// Arithmetic mean and population standard deviation.
PopulationStats update_population(std::span<const double> all_user_s);

// Logistic of the z-score, before clamping. Returns 0.5 when std == 0.
double raw_propensity(double s_u, const PopulationStats& stats);

// raw_propensity clamped to [f_min, f_max].
double diversity_propensity(double s_u, const PopulationStats& stats,
                            const PropensityConfig& config = {});

// Recomputes s_u and f_u for every user from its windowed items. Users with
// fewer than two embeddable items get config.neutral. Returns the stats
// used (count == 0 if no user qualified).
PopulationStats refresh_propensities(std::span<UserState> users,
                                     const EmbeddingTable& table, double now,
                                     double horizon,
                                     const PropensityConfig& config);

}  // namespace graphex
