#include "graphex/graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_set>

#include "graphex/util.hpp"

namespace graphex {

void ItemGraph::add_item(ItemId id, Vector features) {
  if (contains(id))
    throw InvalidArgument("duplicate item id " + std::to_string(id));
  if (features.size() == 0)
    throw InvalidArgument("empty feature vector for item " +
                          std::to_string(id));
  if (feature_dim_ == 0) {
    feature_dim_ = static_cast<std::size_t>(features.size());
  } else if (static_cast<std::size_t>(features.size()) != feature_dim_) {
    throw InvalidArgument("feature dimension " +
                          std::to_string(features.size()) + " != catalog " +
                          std::to_string(feature_dim_));
  }
  if (!features.allFinite())
    throw InvalidArgument("non-finite features for item " + std::to_string(id));
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  features_.push_back(std::move(features));
  adjacency_.emplace_back();
  total_weight_.push_back(0);
}

std::size_t ItemGraph::index_of(ItemId id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw InvalidArgument("unknown item " + std::to_string(id));
  return it->second;
}

std::uint32_t ItemGraph::weight(ItemId a, ItemId b) const {
  const auto& adj = adjacency_[index_of(a)];
  const std::size_t target = index_of(b);
  auto it = std::lower_bound(
      adj.begin(), adj.end(), target,
      [](const Neighbor& n, std::size_t t) { return n.index < t; });
  return (it != adj.end() && it->index == target) ? it->weight : 0;
}

void ItemGraph::increment(std::size_t a, std::size_t b) {
  auto bump = [](std::vector<Neighbor>& adj, std::size_t target) {
    auto it = std::lower_bound(
        adj.begin(), adj.end(), target,
        [](const Neighbor& n, std::size_t t) { return n.index < t; });
    if (it != adj.end() && it->index == target) {
      ++it->weight;
      return false;
    }
    adj.insert(it, Neighbor{target, 1});
    return true;
  };
  const bool created = bump(adjacency_[a], b);
  bump(adjacency_[b], a);
  ++total_weight_[a];
  ++total_weight_[b];
  if (created) ++edge_count_;
}

std::size_t ItemGraph::add_session_edges(const SessionRecord& session) {
  return apply_sessions(std::span<const SessionRecord>(&session, 1));
}

std::size_t ItemGraph::apply_sessions(std::span<const SessionRecord> sessions) {
  std::vector<std::vector<std::size_t>> resolved;
  resolved.reserve(sessions.size());
  for (const auto& s : sessions) {
    std::vector<std::size_t> idx;
    const std::size_t n =
        std::min(s.positive_items.size(), kMaxSessionPositives);
    idx.reserve(n);
    std::unordered_set<ItemId> seen;
    for (std::size_t i = 0; i < n; ++i) {
      const ItemId id = s.positive_items[i];
      if (!seen.insert(id).second)
        throw InvalidArgument("duplicate item " + std::to_string(id) +
                              " in session of user " + std::to_string(s.user));
      idx.push_back(index_of(id));
    }
    resolved.push_back(std::move(idx));
  }

  std::size_t increments = 0;
  for (const auto& idx : resolved) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        increment(idx[i], idx[j]);
        ++increments;
      }
    }
  }
  ++version_;
  return increments;
}

std::vector<std::size_t> ItemGraph::sample_neighbor_indices(
    std::size_t index, std::size_t fanout, std::size_t walk_length,
    std::uint64_t rng_seed) const {
  std::vector<std::size_t> out;
  if (fanout == 0 || walk_length == 0 || adjacency_[index].empty()) return out;

  std::mt19937_64 rng(rng_seed);
  std::vector<std::size_t> visited;
  visited.reserve(fanout * walk_length);
  for (std::size_t w = 0; w < fanout; ++w) {
    std::size_t at = index;
    for (std::size_t step = 0; step < walk_length; ++step) {
      const auto& adj = adjacency_[at];
      if (adj.empty()) break;
      std::uniform_int_distribution<std::uint64_t> pick(0,
                                                        total_weight_[at] - 1);
      std::uint64_t r = pick(rng);
      std::size_t next = adj.back().index;
      for (const auto& nb : adj) {
        if (r < nb.weight) {
          next = nb.index;
          break;
        }
        r -= nb.weight;
      }
      at = next;
      if (at != index) visited.push_back(at);
    }
  }

  std::unordered_set<std::size_t> seen;
  for (std::size_t v : visited) {
    if (out.size() == fanout) break;
    if (seen.insert(v).second) out.push_back(v);
  }
  return out;
}

std::vector<ItemId> ItemGraph::sample_neighbors(ItemId id, std::size_t fanout,
                                                std::size_t walk_length,
                                                std::uint64_t rng_seed) const {
  const auto idx =
      sample_neighbor_indices(index_of(id), fanout, walk_length, rng_seed);
  std::vector<ItemId> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ids_[i]);
  return out;
}

void ItemGraph::check_invariants() const {
  std::size_t half_edges = 0;
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < adjacency_[i].size(); ++k) {
      const auto& nb = adjacency_[i][k];
      if (nb.index == i)
        throw Error("self-loop on item " + std::to_string(ids_[i]));
      if (nb.index >= ids_.size())
        throw Error("dangling edge endpoint at item " + std::to_string(ids_[i]));
      if (nb.weight < 1)
        throw Error("zero-weight edge at item " + std::to_string(ids_[i]));
      if (k > 0 && adjacency_[i][k - 1].index >= nb.index)
        throw Error("unsorted adjacency at item " + std::to_string(ids_[i]));
      if (weight(ids_[nb.index], ids_[i]) != nb.weight)
        throw Error("asymmetric edge " + std::to_string(ids_[i]) + "-" +
                    std::to_string(ids_[nb.index]));
      total += nb.weight;
    }
    if (total != total_weight_[i])
      throw Error("stale weight total at item " + std::to_string(ids_[i]));
    half_edges += adjacency_[i].size();
  }
  if (half_edges != 2 * edge_count_) throw Error("edge count out of sync");
}

bool operator==(const ItemGraph& a, const ItemGraph& b) {
  if (a.feature_dim_ != b.feature_dim_ || a.version_ != b.version_ ||
      a.edge_count_ != b.edge_count_ || a.ids_ != b.ids_)
    return false;
  for (std::size_t i = 0; i < a.ids_.size(); ++i) {
    if (a.features_[i] != b.features_[i]) return false;
    if (a.adjacency_[i] != b.adjacency_[i]) return false;
  }
  return true;
}

void write_snapshot(const ItemGraph& graph, std::ostream& out) {
  out << graph.node_count() << '\t' << graph.edge_count() << '\t'
      << graph.feature_dim() << '\t' << graph.version() << '\n';
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    out << graph.id_at(i);
    const Vector& f = graph.features_at(i);
    for (Eigen::Index c = 0; c < f.size(); ++c) out << '\t' << format_double(f[c]);
    out << '\n';
  }
  std::vector<std::tuple<ItemId, ItemId, std::uint32_t>> edges;
  edges.reserve(graph.edge_count());
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    for (const auto& nb : graph.neighbors_at(i)) {
      const ItemId a = graph.id_at(i);
      const ItemId b = graph.id_at(nb.index);
      if (a < b) edges.emplace_back(a, b, nb.weight);
    }
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& [a, b, w] : edges) out << a << '\t' << b << '\t' << w << '\n';
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string_view> fields(const char* what) {
    if (!std::getline(in_, line_))
      throw ParseError(std::string("unexpected end of file reading ") + what,
                       line_no_ + 1);
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    return split(line_, '\t');
  }

  std::uint64_t uint_field(std::string_view tok, std::size_t col) const {
    std::uint64_t v = 0;
    if (!parse_uint64(tok, v))
      throw ParseError("bad integer '" + std::string(tok) + "'", line_no_,
                       offset(col));
    return v;
  }

  double real_field(std::string_view tok, std::size_t col) const {
    double v = 0;
    if (!parse_double(tok, v))
      throw ParseError("bad number '" + std::string(tok) + "'", line_no_,
                       offset(col));
    return v;
  }

  void expect_columns(const std::vector<std::string_view>& f,
                      std::size_t n) const {
    if (f.size() != n)
      throw ParseError("expected " + std::to_string(n) + " fields, got " +
                           std::to_string(f.size()),
                       line_no_);
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t offset(std::size_t col) const {
    std::size_t off = 0;
    for (std::size_t c = 0; c < col; ++c) {
      off = line_.find('\t', off);
      if (off == std::string::npos) return 0;
      ++off;
    }
    return off;
  }

  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

}  // namespace

ItemGraph read_snapshot(std::istream& in) {
  LineReader reader(in);
  auto header = reader.fields("header");
  reader.expect_columns(header, 4);
  const auto nodes = reader.uint_field(header[0], 0);
  const auto edges = reader.uint_field(header[1], 1);
  const auto dim = reader.uint_field(header[2], 2);
  const auto version = reader.uint_field(header[3], 3);

  ItemGraph graph(dim);
  for (std::uint64_t n = 0; n < nodes; ++n) {
    auto f = reader.fields("node");
    reader.expect_columns(f, dim + 1);
    const auto id = reader.uint_field(f[0], 0);
    Vector feat(static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < dim; ++c) feat[c] = reader.real_field(f[c + 1], c + 1);
    try {
      graph.add_item(static_cast<ItemId>(id), std::move(feat));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), reader.line_no());
    }
  }
  for (std::uint64_t e = 0; e < edges; ++e) {
    auto f = reader.fields("edge");
    reader.expect_columns(f, 3);
    const auto a = static_cast<ItemId>(reader.uint_field(f[0], 0));
    const auto b = static_cast<ItemId>(reader.uint_field(f[1], 1));
    const auto w = reader.uint_field(f[2], 2);
    if (a >= b) throw ParseError("edge endpoints must satisfy i < j", reader.line_no());
    if (w < 1 || w > UINT32_MAX) throw ParseError("edge weight out of range", reader.line_no(), 0);
    if (!graph.contains(a) || !graph.contains(b))
      throw ParseError("edge references unknown item", reader.line_no());
    const std::size_t ia = graph.index_of(a);
    const std::size_t ib = graph.index_of(b);
    if (graph.weight(a, b) != 0) throw ParseError("duplicate edge", reader.line_no());
    auto insert = [&](std::size_t from, std::size_t to) {
      auto& adj = graph.adjacency_[from];
      auto it = std::lower_bound(
          adj.begin(), adj.end(), to,
          [](const Neighbor& n, std::size_t t) { return n.index < t; });
      adj.insert(it, Neighbor{to, static_cast<std::uint32_t>(w)});
      graph.total_weight_[from] += w;
    };
    insert(ia, ib);
    insert(ib, ia);
    ++graph.edge_count_;
  }
  std::string trailing;
  while (std::getline(in, trailing)) {
    if (!trim(trailing).empty())
      throw ParseError("trailing content after declared edges",
                       reader.line_no() + 1);
  }
  graph.version_ = version;
  return graph;
}

void save_snapshot(const ItemGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write graph snapshot " + path.string());
  write_snapshot(graph, out);
  if (!out) throw Error("failed writing graph snapshot " + path.string());
}

ItemGraph load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open graph snapshot " + path.string());
  return read_snapshot(in);
}

}  // namespace graphex
