#include "graphex/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "graphex/util.hpp"

namespace graphex {

namespace {

enum StreamTag : std::uint64_t {
  kCatalogTag = 0x11,
  kUsersTag,
  kRankerTag,
  kFeedbackTag,
  kWalksTag,
  kLabelsTag,
  kUnseenTag,
  kWarmupPoolTag,
  kWarmupFeedbackTag,
  kColdStartTag,
  kInjectTag,
  kRdTag,
};

std::uint64_t derived(const std::optional<std::uint64_t>& explicit_seed,
                      std::uint64_t base, std::uint64_t tag) {
  return explicit_seed ? *explicit_seed : mix_seed(base, tag);
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

Vector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> gauss;
  Vector v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
  } while (v.norm() < 1e-9);
  return v.normalized();
}

TrainConfig simulation_train_config(const ExperimentConfig& config) {
  TrainConfig t = config.train;
  t.seed = config.seeds.walks_seed();
  t.threads = std::max(t.threads, config.threads);
  return t;
}

double max_cosine_to(const EmbeddingTable& table, ItemId item,
                     std::span<const ItemId> others) {
  double best = -1.0;
  const auto v = table.vector(item);
  for (ItemId o : others) best = std::max(best, v.dot(table.vector(o)));
  return best;
}

// Recent positives used for retrieval and novelty.
std::vector<ItemId> recent_history(const SyntheticUser& user, double now,
                                   const ExperimentConfig& config) {
  std::vector<ItemId> items = window_filter(
      user.state.window, now, static_cast<double>(config.window_rounds));
  if (items.empty()) {
    for (const auto& t : user.state.window)
      if (t.timestamp <= now) items.push_back(t.item);
  }
  if (items.size() > config.history_size)
    items.erase(items.begin(),
                items.end() - static_cast<std::ptrdiff_t>(config.history_size));
  return items;
}

std::vector<ItemId> sample_items(const Catalog& catalog, std::size_t count,
                                 const std::unordered_set<ItemId>& excluded,
                                 std::mt19937_64& rng) {
  std::vector<ItemId> pool;
  pool.reserve(catalog.size());
  for (const auto& item : catalog.items)
    if (!excluded.contains(item.id)) pool.push_back(item.id);
  const std::size_t take = std::min(count, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(take);
  return pool;
}

// Mock ranker: true relevance plus Gaussian noise. Returns the top
// `keep` items by score (ties by ascending id) and their scores.
void mock_rank(const SyntheticUser& user, const Catalog& catalog,
               std::span<const ItemId> candidates, double noise,
               std::size_t keep, std::uint64_t seed,
               std::vector<ItemId>& ranked, std::vector<double>& scores) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::pair<double, ItemId>> scored;
  scored.reserve(candidates.size());
  for (ItemId id : candidates) {
    const double eps = gauss(rng);
    scored.emplace_back(true_relevance(user, catalog.item(id).features) + noise * eps, id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  scored.resize(std::min(keep, scored.size()));
  ranked.clear();
  scores.clear();
  for (const auto& [s, id] : scored) {
    ranked.push_back(id);
    scores.push_back(s);
  }
}

Matrix semantic_similarity(const ExperimentConfig& config, const Catalog& catalog,
                           std::span<const ItemId> items) {
  const auto n = static_cast<Eigen::Index>(items.size());
  Matrix s = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (catalog.item(items[static_cast<std::size_t>(i)]).observed_topic ==
          catalog.item(items[static_cast<std::size_t>(j)]).observed_topic)
        s(i, j) = s(j, i) = config.semantic_similarity;
  return s;
}

Matrix embedding_similarity(const EmbeddingTable& table, std::span<const ItemId> items) {
  RowMatrix x(static_cast<Eigen::Index>(items.size()), static_cast<Eigen::Index>(table.dim()));
  for (std::size_t i = 0; i < items.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = table.vector(items[i]).transpose();
  Matrix s = x * x.transpose();
  s = (0.5 * (s + s.transpose())).cwiseMax(-1.0).cwiseMin(1.0);
  s.diagonal().setOnes();
  return s;
}

double entropy_propensity(const std::vector<std::size_t>& topics,
                          std::size_t topic_count, const PropensityConfig& p) {
  if (topics.empty() || topic_count < 2) return p.neutral;
  std::map<std::size_t, double> hist;
  for (auto t : topics) hist[t] += 1.0;
  double h = 0.0;
  for (const auto& [t, c] : hist) {
    const double q = c / static_cast<double>(topics.size());
    h -= q * std::log(q);
  }
  const double theta = 1.0 - h / std::log(static_cast<double>(topic_count));
  return std::clamp(theta, p.f_min, p.f_max);
}

template <typename Fn>
void for_each_user(std::size_t count, std::size_t threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
  if (workers == 1) {
    for (std::size_t u = 0; u < count; ++u) fn(u);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t u = count * w / workers; u < count * (w + 1) / workers; ++u) fn(u);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string_view to_string(RerankerVariant v) {
  switch (v) {
    case RerankerVariant::kNone: return "none";
    case RerankerVariant::kRule: return "rule";
    case RerankerVariant::kFastDppSemantic: return "fast_dpp_semantic";
    case RerankerVariant::kPDpp: return "p_dpp";
    case RerankerVariant::kOurs: return "ours";
  }
  return "unknown";
}

std::optional<RerankerVariant> parse_reranker(std::string_view name) {
  for (auto v : {RerankerVariant::kNone, RerankerVariant::kRule,
                 RerankerVariant::kFastDppSemantic, RerankerVariant::kPDpp,
                 RerankerVariant::kOurs})
    if (to_string(v) == name) return v;
  return std::nullopt;
}

std::uint64_t SeedSet::catalog_seed() const { return derived(catalog, base, kCatalogTag); }
std::uint64_t SeedSet::users_seed() const { return derived(users, base, kUsersTag); }
std::uint64_t SeedSet::ranker_seed() const { return derived(ranker, base, kRankerTag); }
std::uint64_t SeedSet::feedback_seed() const { return derived(feedback, base, kFeedbackTag); }
std::uint64_t SeedSet::walks_seed() const { return derived(walks, base, kWalksTag); }
std::uint64_t SeedSet::labels_seed() const { return derived(labels, base, kLabelsTag); }

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* why) {
    if (!ok) throw InvalidArgument(std::string(field) + ": " + why);
  };
  require(catalog_size >= 1, "catalog_size", "must be >= 1");
  require(topic_count >= 1 && topic_count <= catalog_size, "topic_count",
          "must be in [1, catalog_size]");
  require(feature_dim >= 1, "feature_dim", "must be >= 1");
  require(topic_noise >= 0.0, "topic_noise", "must be >= 0");
  require(clickbait_fraction >= 0.0 && clickbait_fraction <= 1.0, "clickbait_fraction",
          "must be in [0, 1]");
  require(unseen_fraction >= 0.0 && unseen_fraction < 1.0, "unseen_fraction",
          "must be in [0, 1)");
  require(user_count >= 1, "user_count", "must be >= 1");
  require(user_noise >= 0.0, "user_noise", "must be >= 0");
  require(rounds >= 1, "rounds", "must be >= 1");
  require(feed_size >= 1, "feed_size", "must be >= 1");
  require(feed_size <= rank_size, "rank_size", "must be >= feed_size");
  require(rank_size <= retrieval_size, "retrieval_size", "must be >= rank_size");
  require(retrieval_size + feed_size * exclusion_rounds <= catalog_size, "catalog_size",
          "must be >= retrieval_size + feed_size * exclusion_rounds");
  require(window_rounds >= 1, "window_rounds", "must be >= 1");
  require(history_size >= 1, "history_size", "must be >= 1");
  require(rule_topic_cap >= 1, "rule_topic_cap", "must be >= 1");
  require(semantic_similarity >= 0.0 && semantic_similarity < 1.0, "semantic_similarity",
          "must be in [0, 1)");
  require(rd_max_items >= 2, "rd_max_items", "must be >= 2");
  require(threads >= 1, "threads", "must be >= 1");
  require(propensity.f_min > 0.0 && propensity.f_min <= propensity.f_max &&
              propensity.f_max < 1.0,
          "propensity.f_min", "need 0 < f_min <= f_max < 1");
  require(feedback.position_penalty >= 0.0, "feedback.position_penalty", "must be >= 0");
  train.validate();
}

Catalog gen_catalog(const ExperimentConfig& config) {
  Catalog catalog;
  std::mt19937_64 rng(config.seeds.catalog_seed());
  for (std::size_t t = 0; t < config.topic_count; ++t)
    catalog.centroids.push_back(random_unit(rng, config.feature_dim));

  std::uniform_int_distribution<std::size_t> topic_pick(0, config.topic_count - 1);
  std::normal_distribution<double> gauss;
  const double scale = config.topic_noise / std::sqrt(static_cast<double>(config.feature_dim));
  for (std::size_t i = 0; i < config.catalog_size; ++i) {
    const std::size_t topic = topic_pick(rng);
    Vector f = catalog.centroids[topic];
    for (Eigen::Index d = 0; d < f.size(); ++d) f[d] += scale * gauss(rng);
    catalog.items.push_back({static_cast<ItemId>(i), std::move(f), topic, topic});
  }

  // Label corruption has its own stream so clean and corrupted catalogs
  // share identical features.
  if (config.clickbait_fraction > 0.0 && config.topic_count > 1) {
    std::mt19937_64 lrng(config.seeds.labels_seed());
    std::bernoulli_distribution corrupt(config.clickbait_fraction);
    std::uniform_int_distribution<std::size_t> other(0, config.topic_count - 2);
    for (auto& item : catalog.items) {
      if (!corrupt(lrng)) continue;
      std::size_t t = other(lrng);
      if (t >= item.topic) ++t;
      item.observed_topic = t;
    }
  }
  return catalog;
}

std::vector<SyntheticUser> gen_users(const ExperimentConfig& config,
                                     const Catalog& catalog) {
  std::mt19937_64 rng(config.seeds.users_seed());
  std::uniform_int_distribution<std::size_t> n_interests(1, 3);
  std::uniform_int_distribution<std::size_t> topic_pick(0, catalog.centroids.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const double scale = 0.3 / std::sqrt(static_cast<double>(config.feature_dim));

  std::vector<SyntheticUser> users;
  users.reserve(config.user_count);
  for (std::size_t u = 0; u < config.user_count; ++u) {
    SyntheticUser user;
    user.user = static_cast<UserId>(u);
    user.state.user = user.user;
    const std::size_t k = n_interests(rng);
    for (std::size_t c = 0; c < k; ++c) {
      Vector v = catalog.centroids[topic_pick(rng)];
      for (Eigen::Index d = 0; d < v.size(); ++d) v[d] += scale * gauss(rng);
      user.interest_centers.push_back(v.normalized());
    }
    user.appetite = unit(rng);
    user.noise = config.user_noise;
    users.push_back(std::move(user));
  }
  return users;
}

EmbeddingTable feature_table(const Catalog& catalog) {
  const std::size_t dim =
      catalog.items.empty() ? 0 : static_cast<std::size_t>(catalog.items.front().features.size());
  EmbeddingTable table(dim, 0);
  for (const auto& item : catalog.items)
    table.insert(item.id, normalize_or_fallback(item.features, item.id));
  return table;
}

double true_relevance(const SyntheticUser& user, const Eigen::Ref<const Vector>& item) {
  const double norm = item.norm();
  if (norm <= 0.0) return 0.0;
  double best = -1.0;
  for (const auto& c : user.interest_centers) best = std::max(best, c.dot(item) / norm);
  return best;
}

double feedback_logit(const SyntheticUser& user, ItemId item, std::size_t rank,
                      const EmbeddingTable& features,
                      std::span<const ItemId> recent_window,
                      const FeedbackModel& model) {
  const double relevance = true_relevance(user, features.vector(item));
  const double novelty =
      recent_window.empty() ? 1.0 : 1.0 - max_cosine_to(features, item, recent_window);
  return model.relevance_weight * relevance +
         model.novelty_weight * user.appetite * novelty -
         model.position_penalty * static_cast<double>(rank);
}

std::vector<ItemId> user_feedback(const SyntheticUser& user,
                                  std::span<const ItemId> feed,
                                  const EmbeddingTable& features,
                                  std::span<const ItemId> recent_window,
                                  const FeedbackModel& model,
                                  std::uint64_t seed) {
  if (feed.empty()) throw InvalidArgument("empty feed");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ItemId> positives;
  for (std::size_t rank = 0; rank < feed.size(); ++rank) {
    double x = feedback_logit(user, feed[rank], rank, features, recent_window, model);
    // Logistic noise by inverse CDF; the draw happens even at zero scale so
    // the stream does not depend on the noise setting.
    double q = unit(rng);
    q = std::clamp(q, 1e-12, 1.0 - 1e-12);
    x += user.noise * std::log(q / (1.0 - q));
    if (unit(rng) < sigmoid(x)) positives.push_back(feed[rank]);
  }
  return positives;
}

SimulationState initialize(const ExperimentConfig& config) {
  config.validate();
  SimulationState state;
  state.catalog = gen_catalog(config);
  state.features = feature_table(state.catalog);
  state.users = gen_users(config, state.catalog);
  state.recent_feeds.resize(state.users.size());

  state.graph = ItemGraph(config.feature_dim);
  {
    std::mt19937_64 rng(mix_seed(config.seeds.catalog_seed(), kUnseenTag));
    std::bernoulli_distribution unseen(config.unseen_fraction);
    for (const auto& item : state.catalog.items) {
      const bool skip = config.unseen_fraction > 0.0 && unseen(rng);
      if (!skip) state.graph.add_item(item.id, item.features);
    }
  }
  if (state.graph.empty()) throw Error("every catalog item is unseen");

  std::unordered_set<ItemId> not_in_graph;
  for (const auto& item : state.catalog.items)
    if (!state.graph.contains(item.id)) not_in_graph.insert(item.id);

  // Warm-up sessions bootstrap the co-interaction graph and user windows.
  std::vector<SessionRecord> sessions;
  std::vector<std::vector<std::size_t>> observed_topics(state.users.size());
  for (std::size_t s = 0; s < config.warmup_sessions; ++s) {
    const double ts = static_cast<double>(s) - static_cast<double>(config.warmup_sessions) + 1.0;
    for (auto& user : state.users) {
      std::mt19937_64 rng(mix_seed(config.seeds.ranker_seed(), kWarmupPoolTag, s, user.user));
      const auto pool = sample_items(state.catalog, 100, not_in_graph, rng);
      std::vector<ItemId> ranked;
      std::vector<double> scores;
      mock_rank(user, state.catalog, pool, config.ranker_noise, config.feed_size,
                mix_seed(config.seeds.ranker_seed(), kWarmupPoolTag, s, user.user, 1),
                ranked, scores);
      std::vector<ItemId> window;
      for (const auto& t : user.state.window) window.push_back(t.item);
      const auto positives =
          user_feedback(user, ranked, state.features, window, config.feedback,
                        mix_seed(config.seeds.feedback_seed(), kWarmupFeedbackTag, s, user.user));
      for (ItemId p : positives) {
        user.state.window.push_back({p, ts});
        observed_topics[user.user].push_back(state.catalog.item(p).observed_topic);
      }
      sessions.push_back({user.user, positives, ts});
    }
  }
  state.graph.apply_sessions(sessions);

  for (auto& user : state.users)
    user.static_propensity = entropy_propensity(observed_topics[user.user],
                                                config.topic_count, config.propensity);

  auto trained = train_unsupervised(state.graph, simulation_train_config(config));
  state.weights = std::move(trained.weights);
  state.table = std::move(trained.table);
  return state;
}

EmbeddingTable catalog_table(const SimulationState& state) {
  EmbeddingTable out(state.table.dim(), state.table.graph_version());
  for (const auto& item : state.catalog.items) {
    if (state.table.contains(item.id))
      out.insert(item.id, state.table.vector(item.id));
    else
      out.insert(item.id, infer_unseen(item.features, state.weights, item.id));
  }
  return out;
}

std::vector<ItemId> rerank_feed(const ExperimentConfig& config,
                                const SimulationState& state,
                                const EmbeddingTable& round_table,
                                std::span<const ItemId> ranked,
                                std::span<const double> rank_scores,
                                double propensity) {
  const std::size_t k = std::min(config.feed_size, ranked.size());
  switch (config.reranker) {
    case RerankerVariant::kNone:
      return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k)};
    case RerankerVariant::kRule: {
      std::vector<ItemId> feed;
      std::vector<ItemId> skipped;
      std::map<std::size_t, std::size_t> per_topic;
      for (ItemId id : ranked) {
        if (feed.size() == k) break;
        auto& count = per_topic[state.catalog.item(id).observed_topic];
        if (count < config.rule_topic_cap) {
          ++count;
          feed.push_back(id);
        } else {
          skipped.push_back(id);
        }
      }
      for (std::size_t i = 0; feed.size() < k && i < skipped.size(); ++i)
        feed.push_back(skipped[i]);
      return feed;
    }
    case RerankerVariant::kFastDppSemantic:
    case RerankerVariant::kPDpp:
    case RerankerVariant::kOurs: {
      RerankInput input;
      input.items.assign(ranked.begin(), ranked.end());
      input.scores = Eigen::Map<const Vector>(rank_scores.data(),
                                              static_cast<Eigen::Index>(rank_scores.size()));
      input.similarity = config.reranker == RerankerVariant::kOurs
                             ? embedding_similarity(round_table, ranked)
                             : semantic_similarity(config, state.catalog, ranked);
      input.propensity = propensity;
      input.k = k;
      return rerank(input, config.rerank);
    }
  }
  throw Error("unknown reranker");
}

RoundReport run_round(SimulationState& state, const ExperimentConfig& config) {
  const std::size_t round = state.round + 1;
  const double now = static_cast<double>(round) - 1.0;
  const EmbeddingTable round_table = catalog_table(state);

  if (config.reranker == RerankerVariant::kOurs) {
    std::vector<UserState> states;
    states.reserve(state.users.size());
    for (auto& u : state.users) states.push_back(std::move(u.state));
    refresh_propensities(states, round_table, now, static_cast<double>(config.window_rounds),
                         config.propensity);
    for (std::size_t u = 0; u < states.size(); ++u) state.users[u].state = std::move(states[u]);
  }

  std::vector<UserRound> results(state.users.size());
  for_each_user(state.users.size(), config.threads, [&](std::size_t u) {
    const SyntheticUser& user = state.users[u];
    UserRound& out = results[u];

    std::unordered_set<ItemId> exclusions;
    for (const auto& feed : state.recent_feeds[u]) exclusions.insert(feed.begin(), feed.end());

    const auto history = recent_history(user, now, config);
    try {
      for (const auto& c :
           match_candidates(history, state.table, config.retrieval_size, exclusions, round).items)
        out.candidates.push_back(c.item);
    } catch (const ColdStartError&) {
      out.cold_start = true;
      std::mt19937_64 rng(mix_seed(config.seeds.ranker_seed(), kColdStartTag, round, u));
      out.candidates = sample_items(state.catalog, config.retrieval_size, exclusions, rng);
    }
    if (config.random_candidates > 0) {
      std::unordered_set<ItemId> taken = exclusions;
      taken.insert(out.candidates.begin(), out.candidates.end());
      std::mt19937_64 rng(mix_seed(config.seeds.ranker_seed(), kInjectTag, round, u));
      for (ItemId id : sample_items(state.catalog, config.random_candidates, taken, rng))
        out.candidates.push_back(id);
    }

    mock_rank(user, state.catalog, out.candidates, config.ranker_noise, config.rank_size,
              mix_seed(config.seeds.ranker_seed(), round, u), out.ranked, out.rank_scores);

    switch (config.reranker) {
      case RerankerVariant::kOurs: out.propensity = user.state.f_u; break;
      case RerankerVariant::kPDpp: out.propensity = user.static_propensity; break;
      default: out.propensity = config.propensity.neutral; break;
    }
    out.feed = rerank_feed(config, state, round_table, out.ranked, out.rank_scores, out.propensity);
    if (out.feed.size() != config.feed_size)
      throw Error("user " + std::to_string(u) + " received " +
                  std::to_string(out.feed.size()) + " items, expected " +
                  std::to_string(config.feed_size));
    out.positives = user_feedback(user, out.feed, state.features, history, config.feedback,
                                  mix_seed(config.seeds.feedback_seed(), round, u));
  });

  RoundReport report;
  report.round = round;
  std::vector<std::vector<ItemId>> feeds;
  std::vector<std::vector<ItemId>> candidates;
  feeds.reserve(results.size());
  candidates.reserve(results.size());
  for (std::size_t u = 0; u < results.size(); ++u) {
    auto& user = state.users[u];
    for (ItemId p : results[u].positives)
      user.state.window.push_back({p, static_cast<double>(round)});
    report.positives += results[u].positives.size();
    state.exposed.insert(results[u].feed.begin(), results[u].feed.end());
    auto& recent = state.recent_feeds[u];
    recent.push_back(results[u].feed);
    while (recent.size() > config.exclusion_rounds) recent.pop_front();
    feeds.push_back(results[u].feed);
    candidates.push_back(results[u].candidates);
  }

  const std::uint64_t rd_seed = mix_seed(config.seeds.ranker_seed(), kRdTag, round);
  report.ilad = ilad(feeds, round_table);
  report.rd = rd(candidates, round_table, config.rd_max_items, rd_seed);
  report.coverage = coverage(state.exposed, state.catalog.size());
  if (config.feature_metrics) {
    report.ilad_features = ilad(feeds, state.features);
    report.rd_features = rd(candidates, state.features, config.rd_max_items, rd_seed);
  }

  if (config.graph_update) {
    std::vector<SessionRecord> sessions;
    for (std::size_t u = 0; u < results.size(); ++u) {
      for (ItemId p : results[u].positives)
        if (!state.graph.contains(p)) state.graph.add_item(p, state.catalog.item(p).features);
      sessions.push_back({state.users[u].user, results[u].positives, static_cast<double>(round)});
    }
    state.graph.apply_sessions(sessions);
    auto trained = train_incremental(state.graph, simulation_train_config(config), state.weights);
    state.weights = std::move(trained.weights);
    state.table = std::move(trained.table);
  }
  report.graph_edges = state.graph.edge_count();

  state.last_round = std::move(results);
  state.round = round;
  return report;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir) {
  std::ofstream csv;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    csv.open(*out_dir / "metrics.csv", std::ios::binary);
    if (!csv) throw Error("cannot write " + (*out_dir / "metrics.csv").string());
    write_metrics_header(csv);
  }
  ExperimentResult result;
  try {
    result.final_state = initialize(config);
    for (std::size_t r = 0; r < config.rounds; ++r) {
      result.reports.push_back(run_round(result.final_state, config));
      if (csv.is_open()) {
        write_metrics_row(csv, result.reports.back());
        csv.flush();
      }
    }
    if (out_dir) {
      save_snapshot(result.final_state.graph, *out_dir / "graph.tsv");
      save_table(result.final_state.table, *out_dir / "embeddings.tsv");
      save_weights(result.final_state.weights, *out_dir / "weights.tsv");
    }
  } catch (const std::exception& e) {
    if (csv.is_open()) {
      csv << "# FAILED: " << e.what() << '\n';
      csv.flush();
    }
    throw;
  }
  return result;
}

}  // namespace graphex
