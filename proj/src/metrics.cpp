#include "graphex/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

#include "graphex/util.hpp"

namespace graphex {

double mean_pairwise_distance(std::span<const ItemId> items,
                              const EmbeddingTable& table) {
  if (items.size() < 2) throw InsufficientData("list needs at least two items");
  RowMatrix rows(static_cast<Eigen::Index>(items.size()),
                 static_cast<Eigen::Index>(table.dim()));
  for (std::size_t i = 0; i < items.size(); ++i)
    rows.row(static_cast<Eigen::Index>(i)) = table.vector(items[i]).transpose();
  const Matrix gram = rows * rows.transpose();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i)
    for (Eigen::Index j = i + 1; j < gram.cols(); ++j) sum += 1.0 - gram(i, j);
  const double pairs = static_cast<double>(items.size() * (items.size() - 1) / 2);
  return sum / pairs;
}

double ilad(std::span<const std::vector<ItemId>> lists,
            const EmbeddingTable& table) {
  double total = 0.0;
  std::size_t users = 0;
  for (const auto& list : lists) {
    if (list.size() < 2) continue;
    total += mean_pairwise_distance(list, table);
    ++users;
  }
  if (users == 0) throw InsufficientData("no list with at least two items");
  return total / static_cast<double>(users);
}

double rd(std::span<const std::vector<ItemId>> candidate_sets,
          const EmbeddingTable& table, std::size_t max_items,
          std::uint64_t seed) {
  if (max_items < 2) throw InvalidArgument("rd needs max_items >= 2");
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t u = 0; u < candidate_sets.size(); ++u) {
    const auto& list = candidate_sets[u];
    if (list.size() < 2) continue;
    if (list.size() <= max_items) {
      total += mean_pairwise_distance(list, table);
    } else {
      std::vector<ItemId> sample(list);
      std::mt19937_64 rng(mix_seed(seed, u));
      // Partial Fisher-Yates: the first max_items entries are the sample.
      for (std::size_t i = 0; i < max_items; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, sample.size() - 1);
        std::swap(sample[i], sample[pick(rng)]);
      }
      sample.resize(max_items);
      total += mean_pairwise_distance(sample, table);
    }
    ++users;
  }
  if (users == 0) throw InsufficientData("no candidate set with at least two items");
  return total / static_cast<double>(users);
}

double coverage(const std::unordered_set<ItemId>& exposed,
                std::size_t catalog_size) {
  if (catalog_size == 0) throw InvalidArgument("catalog size must be >= 1");
  return static_cast<double>(exposed.size()) / static_cast<double>(catalog_size);
}

void write_metrics_header(std::ostream& out) { out << kMetricsCsvHeader << '\n'; }

void write_metrics_row(std::ostream& out, const RoundReport& r) {
  out << r.round << ',' << format_fixed(r.ilad, 6) << ',' << format_fixed(r.rd, 6)
      << ',' << format_fixed(r.coverage, 6) << ',' << r.positives << ','
      << r.graph_edges << '\n';
}

}  // namespace graphex
