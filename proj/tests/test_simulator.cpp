#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "graphex/simulator.hpp"

using namespace graphex;

namespace {

ExperimentConfig small() {
  ExperimentConfig c;
  c.catalog_size = 240;
  c.topic_count = 6;
  c.feature_dim = 8;
  c.user_count = 30;
  c.rounds = 3;
  c.feed_size = 5;
  c.retrieval_size = 60;
  c.rank_size = 20;
  c.train.dims = {8, 8};
  c.train.fanouts = {4, 4};
  c.train.epochs = 4;
  c.train.incremental_epochs = 1;
  return c;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("reranker names") {
  for (auto v : {RerankerVariant::kNone, RerankerVariant::kRule, RerankerVariant::kFastDppSemantic,
                 RerankerVariant::kPDpp, RerankerVariant::kOurs})
    CHECK(parse_reranker(to_string(v)) == v);
  CHECK_FALSE(parse_reranker("mmr").has_value());
}

TEST_CASE("config validation names the field") {
  auto c = small();
  c.feed_size = 100;
  try {
    c.validate();
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("feed_size") != std::string::npos);
  }
  c = small();
  c.rounds = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small();
  c.topic_count = 1000;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("catalog generation") {
  auto c = small();
  c.catalog_size = 10;
  c.topic_count = 2;
  const auto cat = gen_catalog(c);
  REQUIRE(cat.size() == 10);
  for (std::size_t i = 0; i < cat.size(); ++i) {
    CHECK(cat.items[i].id == i);
    CHECK(cat.items[i].topic < 2);
    CHECK(cat.items[i].observed_topic == cat.items[i].topic);
  }
  const auto again = gen_catalog(c);
  for (std::size_t i = 0; i < cat.size(); ++i) CHECK(again.items[i].features == cat.items[i].features);

  const auto big = gen_catalog(small());
  double intra = 0.0, inter = 0.0;
  std::size_t ni = 0, nx = 0;
  for (std::size_t a = 0; a < big.size(); ++a)
    for (std::size_t b = a + 1; b < big.size(); ++b) {
      const auto& x = big.items[a];
      const auto& y = big.items[b];
      const double cs = x.features.normalized().dot(y.features.normalized());
      if (x.topic == y.topic) {
        intra += cs;
        ++ni;
      } else {
        inter += cs;
        ++nx;
      }
    }
  CHECK(intra / ni > inter / nx);
}

TEST_CASE("clickbait corrupts labels only") {
  auto c = small();
  const auto honest = gen_catalog(c);
  c.clickbait_fraction = 0.2;
  const auto bait = gen_catalog(c);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < bait.size(); ++i) {
    CHECK(bait.items[i].features == honest.items[i].features);
    CHECK(bait.items[i].topic == honest.items[i].topic);
    if (bait.items[i].observed_topic != bait.items[i].topic) ++changed;
  }
  CHECK(changed > bait.size() / 10);
  CHECK(changed < bait.size() * 3 / 10);
}

TEST_CASE("users") {
  const auto c = small();
  const auto cat = gen_catalog(c);
  const auto users = gen_users(c, cat);
  REQUIRE(users.size() == c.user_count);
  for (const auto& u : users) {
    CHECK(u.interest_centers.size() >= 1);
    CHECK(u.interest_centers.size() <= 3);
    for (const auto& v : u.interest_centers) CHECK(v.norm() == doctest::Approx(1.0));
    CHECK(u.appetite >= 0.0);
    CHECK(u.appetite <= 1.0);
  }
}

TEST_CASE("feedback formula") {
  const auto c = small();
  const auto cat = gen_catalog(c);
  const auto feats = feature_table(cat);
  SyntheticUser u;
  u.interest_centers = {Vector(feats.vector(0))};
  u.appetite = 0.0;
  u.noise = 0.0;
  const FeedbackModel m;
  CHECK(feedback_logit(u, 0, 0, feats, {}, m) == doctest::Approx(m.relevance_weight));

  // Orthogonal interest: only the position term remains.
  Vector orth = Vector::Zero(c.feature_dim);
  const auto f0 = feats.vector(3);
  orth(0) = -f0(1);
  orth(1) = f0(0);
  u.interest_centers = {orth.normalized()};
  CHECK(feedback_logit(u, 3, 4, feats, {}, m) == doctest::Approx(-m.position_penalty * 4));
  CHECK(sigmoid(feedback_logit(u, 3, 4, feats, {}, m)) <= 0.5);

  // Novelty counts only for an appetite > 0.
  u.appetite = 1.0;
  const std::vector<ItemId> window{3};
  CHECK(feedback_logit(u, 3, 0, feats, window, m) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(feedback_logit(u, 3, 0, feats, {}, m) == doctest::Approx(m.novelty_weight));
}

TEST_CASE("mean positives match the analytic expectation") {
  const auto c = small();
  const auto cat = gen_catalog(c);
  const auto feats = feature_table(cat);
  auto users = gen_users(c, cat);
  auto u = users[0];
  u.noise = 0.0;
  const std::vector<ItemId> feed{5, 17, 40, 81, 120, 200, 9, 33};
  const std::vector<ItemId> window{1, 2};
  double expect = 0.0, var = 0.0;
  for (std::size_t r = 0; r < feed.size(); ++r) {
    const double p = sigmoid(feedback_logit(u, feed[r], r, feats, window, c.feedback));
    expect += p;
    var += p * (1.0 - p);
  }
  const int feeds = 10000;
  double total = 0.0;
  for (int s = 0; s < feeds; ++s)
    total += static_cast<double>(user_feedback(u, feed, feats, window, c.feedback, s).size());
  const double se = std::sqrt(var / feeds);
  CHECK(std::abs(total / feeds - expect) <= 3.0 * se);

  CHECK(user_feedback(u, feed, feats, window, c.feedback, 7) ==
        user_feedback(u, feed, feats, window, c.feedback, 7));
  CHECK_THROWS_AS(user_feedback(u, {}, feats, window, c.feedback, 1), InvalidArgument);
}

TEST_CASE("graph stays fixed without updates") {
  auto c = small();
  c.graph_update = false;
  const auto res = run_experiment(c);
  REQUIRE(res.reports.size() == 3);
  for (const auto& r : res.reports) CHECK(r.graph_edges == res.reports.front().graph_edges);
}

TEST_CASE("updates grow the graph") {
  const auto res = run_experiment(small());
  CHECK(res.reports.back().graph_edges >= res.reports.front().graph_edges);
  CHECK(res.final_state.table.graph_version() == res.final_state.graph.version());
}

TEST_CASE("none reranker serves the top of the ranked list") {
  auto c = small();
  c.reranker = RerankerVariant::kNone;
  auto state = initialize(c);
  run_round(state, c);
  for (const auto& u : state.last_round) {
    REQUIRE(u.ranked.size() >= c.feed_size);
    CHECK(std::equal(u.feed.begin(), u.feed.end(), u.ranked.begin()));
    for (std::size_t i = 1; i < u.rank_scores.size(); ++i)
      CHECK(u.rank_scores[i - 1] >= u.rank_scores[i]);
  }
}

TEST_CASE("rule reranker caps topics") {
  auto c = small();
  c.reranker = RerankerVariant::kRule;
  c.rule_topic_cap = 1;
  auto state = initialize(c);
  run_round(state, c);
  for (const auto& u : state.last_round) {
    std::map<std::size_t, int> topics;
    for (auto id : u.feed) ++topics[state.catalog.item(id).observed_topic];
    std::size_t distinct_ranked = 0;
    std::set<std::size_t> seen;
    for (auto id : u.ranked) seen.insert(state.catalog.item(id).observed_topic);
    distinct_ranked = seen.size();
    if (distinct_ranked >= c.feed_size)
      for (auto& [t, n] : topics) CHECK(n == 1);
  }
}

TEST_CASE("feeds, exclusions and coverage") {
  for (auto v : {RerankerVariant::kNone, RerankerVariant::kRule, RerankerVariant::kFastDppSemantic,
                 RerankerVariant::kPDpp, RerankerVariant::kOurs}) {
    auto c = small();
    c.reranker = v;
    c.rounds = 4;
    auto state = initialize(c);
    std::vector<std::vector<std::vector<ItemId>>> history(c.user_count);
    double last_cov = 0.0;
    for (std::size_t r = 0; r < c.rounds; ++r) {
      const auto rep = run_round(state, c);
      CHECK(rep.coverage >= last_cov);
      last_cov = rep.coverage;
      CHECK(rep.ilad >= 0.0);
      CHECK(rep.ilad <= 2.0);
      CHECK(rep.rd >= 0.0);
      CHECK(rep.rd <= 2.0);
      for (std::size_t u = 0; u < c.user_count; ++u) {
        const auto& feed = state.last_round[u].feed;
        CHECK(feed.size() == c.feed_size);
        CHECK(std::set<ItemId>(feed.begin(), feed.end()).size() == feed.size());
        for (const auto& old : history[u])
          for (auto id : feed) CHECK(std::find(old.begin(), old.end(), id) == old.end());
        history[u].push_back(feed);
        if (history[u].size() > c.exclusion_rounds) history[u].erase(history[u].begin());
      }
    }
  }
}

TEST_CASE("experiments are deterministic and write artifacts") {
  auto c = small();
  c.rounds = 1;
  const auto a = std::filesystem::temp_directory_path() / "graphex_sim_a";
  const auto b = std::filesystem::temp_directory_path() / "graphex_sim_b";
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  const auto ra = run_experiment(c, a);
  run_experiment(c, b);
  CHECK(ra.reports.size() == 1);
  for (const char* f : {"metrics.csv", "graph.tsv", "embeddings.tsv", "weights.tsv"}) {
    CHECK(std::filesystem::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto csv = slurp(a / "metrics.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST_CASE("threaded rounds match single-threaded feeds") {
  auto c = small();
  c.rounds = 1;
  c.graph_update = false;
  auto s1 = initialize(c);
  run_round(s1, c);
  auto c2 = c;
  c2.threads = 3;
  c2.train.threads = 1;
  auto s2 = initialize(c);
  run_round(s2, c2);
  for (std::size_t u = 0; u < c.user_count; ++u)
    CHECK(s1.last_round[u].feed == s2.last_round[u].feed);
}

TEST_CASE("unseen items get inferred embeddings") {
  auto c = small();
  c.unseen_fraction = 0.3;
  c.random_candidates = 10;
  c.rounds = 2;
  const auto res = run_experiment(c);
  CHECK(res.final_state.graph.node_count() < c.catalog_size);
  const auto full = catalog_table(res.final_state);
  CHECK(full.size() == c.catalog_size);
}

TEST_CASE("failures leave a marker in the csv") {
  auto c = small();
  c.unseen_fraction = 1.0;
  const auto dir = std::filesystem::temp_directory_path() / "graphex_sim_fail";
  std::filesystem::remove_all(dir);
  CHECK_THROWS(run_experiment(c, dir));
  CHECK(slurp(dir / "metrics.csv").find("# FAILED") != std::string::npos);
  std::filesystem::remove_all(dir);
}
