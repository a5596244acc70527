#include "graphex/retrieval.hpp"

#include <algorithm>

namespace graphex {

CandidateSet match_candidates(std::span<const ItemId> history_positives,
                              const EmbeddingTable& table, std::size_t n,
                              const std::unordered_set<ItemId>& exclusions,
                              std::size_t round) {
  if (n == 0) throw InvalidArgument("retrieval size must be >= 1");
  if (table.empty()) throw InvalidArgument("empty embedding table");

  std::vector<std::size_t> rows;
  for (ItemId h : history_positives)
    if (table.contains(h)) rows.push_back(table.index_of(h));
  if (rows.empty()) throw ColdStartError("no embedded history positives");

  RowMatrix queries(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(table.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    queries.row(static_cast<Eigen::Index>(r)) = table.row(rows[r]).transpose();
  const Vector best = (table.matrix() * queries.transpose()).rowwise().maxCoeff();

  std::vector<Candidate> scored;
  scored.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const ItemId id = table.ids()[i];
    if (exclusions.contains(id)) continue;
    scored.push_back({id, std::clamp(best[static_cast<Eigen::Index>(i)], -1.0, 1.0)});
  }
  auto better = [](const Candidate& a, const Candidate& b) {
    return a.match_score != b.match_score ? a.match_score > b.match_score
                                          : a.item < b.item;
  };
  const std::size_t keep = std::min(n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), better);
  scored.resize(keep);
  return CandidateSet{std::move(scored), round};
}

}  // namespace graphex
