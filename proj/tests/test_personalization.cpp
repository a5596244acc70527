#include <doctest.h>

#include <cmath>
#include <random>

#include "graphex/personalization.hpp"
#include "oracles.hpp"

using namespace graphex;

namespace {

EmbeddingTable table_from(const std::vector<oracle::Vec>& rows) {
  EmbeddingTable t(rows.front().size(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    t.insert(static_cast<ItemId>(i), Eigen::Map<const Vector>(rows[i].data(), rows[i].size()));
  return t;
}

}  // namespace

TEST_CASE("window filter keeps the half-open interval") {
  const std::vector<TimedItem> h{{1, 1.0}, {2, 5.0}, {3, 9.0}};
  CHECK(window_filter(h, 10.0, 6.0) == std::vector<ItemId>{2, 3});
  CHECK(window_filter(h, 10.0, 100.0) == std::vector<ItemId>{1, 2, 3});
  CHECK(window_filter({}, 10.0, 6.0).empty());
  // Left edge excluded, right edge included.
  CHECK(window_filter(h, 9.0, 4.0) == std::vector<ItemId>{3});
  CHECK_THROWS_AS(window_filter(h, 10.0, 0.0), InvalidArgument);
}

TEST_CASE("mean pairwise similarity") {
  const auto t = table_from({{1, 0}, {1, 0}, {0, 1}});
  const std::vector<ItemId> same{0, 1}, orth{0, 2};
  CHECK(mean_pairwise_similarity(same, t) == doctest::Approx(1.0));
  CHECK(mean_pairwise_similarity(orth, t) == doctest::Approx(0.0));
  const std::vector<ItemId> one{0}, missing{0, 9};
  CHECK_THROWS_AS(mean_pairwise_similarity(one, t), InsufficientData);
  CHECK_THROWS_AS(mean_pairwise_similarity(missing, t), InsufficientData);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = oracle::random_unit_vectors(4, 6, rng);
    const auto rt = table_from(rows);
    const std::vector<ItemId> all{0, 1, 2, 3};
    CHECK(std::abs(mean_pairwise_similarity(all, rt) - oracle::mean_pair_cosine(rows)) <= 1e-12);
  }
}

TEST_CASE("literal flag switches to mean distance") {
  const auto t = table_from({{1, 0}, {0.6, 0.8}});
  const std::vector<ItemId> items{0, 1};
  PropensityConfig literal;
  literal.literal_eq2 = true;
  CHECK(user_similarity(items, t, {}) == doctest::Approx(0.6));
  CHECK(user_similarity(items, t, literal) == doctest::Approx(0.4));
}

TEST_CASE("population statistics") {
  const std::vector<double> two{0.2, 0.4};
  auto s = update_population(two);
  CHECK(s.mean == doctest::Approx(0.3));
  CHECK(s.std == doctest::Approx(0.1));
  CHECK(s.count == 2);
  const std::vector<double> flat{0.7, 0.7, 0.7};
  s = update_population(flat);
  CHECK(s.mean == doctest::Approx(0.7));
  CHECK(s.std == 0.0);
  CHECK_THROWS_AS(update_population({}), InvalidArgument);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  oracle::Vec xs(1000);
  for (auto& x : xs) x = u(rng);
  const auto [m, sd] = oracle::mean_std(xs);
  s = update_population(xs);
  CHECK(std::abs(s.mean - m) <= 1e-12);
  CHECK(std::abs(s.std - sd) <= 1e-12);
}

TEST_CASE("propensity values") {
  const PopulationStats st{0.3, 0.1, 10};
  CHECK(diversity_propensity(0.3, st) == 0.5);
  CHECK(std::abs(diversity_propensity(0.4, st) - 1.0 / (1.0 + std::exp(-1.0))) <= 1e-12);
  CHECK(diversity_propensity(0.9, {0.5, 0.0, 10}) == 0.5);
  // Clamped at both ends.
  CHECK(diversity_propensity(100.0, st) == 0.95);
  CHECK(diversity_propensity(-100.0, st) == 0.05);
  CHECK(raw_propensity(100.0, st) > 0.95);
}

TEST_CASE("propensity is increasing in s_u") {
  const PopulationStats st{0.1, 0.2, 10};
  double prev = raw_propensity(-1.0, st);
  for (double s = -0.95; s <= 1.0; s += 0.05) {
    const double f = raw_propensity(s, st);
    CHECK(f > prev);
    prev = f;
  }
}

TEST_CASE("symmetric population is centered") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.4, 0.15);
  std::vector<double> s(600);
  for (auto& x : s) x = g(rng);
  const auto st = update_population(s);
  double sum = 0.0;
  for (double x : s) sum += diversity_propensity(x, st);
  CHECK(std::abs(sum / s.size() - 0.5) <= 0.05);
}

TEST_CASE("refresh assigns neutral values and responds to window changes") {
  const auto t = table_from({{1, 0}, {0, 1}, {0.6, 0.8}, {0.8, 0.6}, {1, 0}});
  std::vector<UserState> users(4);
  users[0].window = {{0, 1.0}, {1, 2.0}};         // cos 0
  users[1].window = {{2, 1.0}, {3, 2.0}};         // cos 0.96
  users[2].window = {{0, 1.0}, {2, 2.0}};         // cos 0.6
  users[3].window = {{4, 2.0}};                   // too short
  const auto st = refresh_propensities(users, t, 2.0, 5.0, {});
  CHECK(st.count == 3);
  CHECK(users[3].f_u == 0.5);
  CHECK_FALSE(users[3].has_similarity);
  CHECK(users[1].f_u > users[2].f_u);
  CHECK(users[2].f_u > users[0].f_u);
  for (const auto& u : users) {
    CHECK(u.f_u >= 0.05);
    CHECK(u.f_u <= 0.95);
  }

  // Old items fall out of the window.
  const auto later = refresh_propensities(users, t, 10.0, 5.0, {});
  CHECK(later.count == 0);
  for (const auto& u : users) CHECK(u.f_u == 0.5);

  // Same stats, more self-similar window -> larger f.
  const double before = diversity_propensity(0.0, st);
  const double after = diversity_propensity(0.96, st);
  CHECK(after > before);
}
