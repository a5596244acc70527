#include "graphex/personalization.hpp"

#include <algorithm>
#include <cmath>

namespace graphex {

std::vector<ItemId> window_filter(std::span<const TimedItem> history,
                                  double now, double horizon) {
  if (!(horizon > 0.0)) throw InvalidArgument("window horizon must be > 0");
  std::vector<ItemId> out;
  for (const auto& h : history)
    if (h.timestamp > now - horizon && h.timestamp <= now) out.push_back(h.item);
  return out;
}

double mean_pairwise_similarity(std::span<const ItemId> items,
                                const EmbeddingTable& table) {
  std::vector<std::size_t> rows;
  rows.reserve(items.size());
  for (ItemId id : items)
    if (table.contains(id)) rows.push_back(table.index_of(id));
  if (rows.size() < 2)
    throw InsufficientData("need at least two embedded items");
  double sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j)
      sum += table.row(rows[i]).dot(table.row(rows[j]));
  const double pairs = static_cast<double>(rows.size() * (rows.size() - 1) / 2);
  return sum / pairs;
}

double user_similarity(std::span<const ItemId> items,
                       const EmbeddingTable& table,
                       const PropensityConfig& config) {
  const double s = mean_pairwise_similarity(items, table);
  return config.literal_eq2 ? 1.0 - s : s;
}

PopulationStats update_population(std::span<const double> all_user_s) {
  if (all_user_s.empty()) throw InvalidArgument("empty population");
  double mean = 0.0;
  for (double s : all_user_s) mean += s;
  mean /= static_cast<double>(all_user_s.size());
  const auto [lo, hi] = std::minmax_element(all_user_s.begin(), all_user_s.end());
  if (*lo == *hi) return {*lo, 0.0, all_user_s.size()};
  double var = 0.0;
  for (double s : all_user_s) var += (s - mean) * (s - mean);
  var /= static_cast<double>(all_user_s.size());
  return {mean, std::sqrt(var), all_user_s.size()};
}

double raw_propensity(double s_u, const PopulationStats& stats) {
  if (!(stats.std > 0.0)) return 0.5;
  const double z = (s_u - stats.mean) / stats.std;
  return 1.0 / (1.0 + std::exp(-z));
}

double diversity_propensity(double s_u, const PopulationStats& stats,
                            const PropensityConfig& config) {
  return std::clamp(raw_propensity(s_u, stats), config.f_min, config.f_max);
}

PopulationStats refresh_propensities(std::span<UserState> users,
                                     const EmbeddingTable& table, double now,
                                     double horizon,
                                     const PropensityConfig& config) {
  std::vector<double> values;
  for (auto& u : users) {
    const auto items = window_filter(u.window, now, horizon);
    u.has_similarity = false;
    try {
      u.s_u = user_similarity(items, table, config);
      u.has_similarity = true;
      values.push_back(u.s_u);
    } catch (const InsufficientData&) {
    }
    u.last_update = now;
  }
  PopulationStats stats;
  if (values.size() >= 2) stats = update_population(values);
  for (auto& u : users) {
    u.f_u = (u.has_similarity && stats.count >= 2)
                ? diversity_propensity(u.s_u, stats, config)
                : config.neutral;
  }
  return stats;
}

}  // namespace graphex
