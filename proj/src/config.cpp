#include "graphex/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>

#include "graphex/util.hpp"

namespace graphex {

namespace {

struct Descriptor {
  const char* key;
  std::function<void(RunSettings&, std::string_view)> set;
  std::function<std::string(const RunSettings&)> get;
};

std::size_t to_count(std::string_view v) {
  std::uint64_t out = 0;
  if (!parse_uint64(v, out)) throw std::invalid_argument("expected a non-negative integer");
  return static_cast<std::size_t>(out);
}

std::uint64_t to_u64(std::string_view v) {
  std::uint64_t out = 0;
  if (!parse_uint64(v, out)) throw std::invalid_argument("expected a non-negative integer");
  return out;
}

double to_real(std::string_view v) {
  double out = 0;
  if (!parse_double(v, out)) throw std::invalid_argument("expected a finite number");
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected on/off");
}

std::vector<std::size_t> to_count_list(std::string_view v) {
  std::vector<std::size_t> out;
  for (auto tok : split(v, ',')) out.push_back(to_count(trim(tok)));
  return out;
}

std::string from_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string from_bool(bool b) { return b ? "on" : "off"; }

#define GX_COUNT(KEY, FIELD)                                                        \
  Descriptor{KEY, [](RunSettings& s, std::string_view v) { s.FIELD = to_count(v); }, \
             [](const RunSettings& s) { return std::to_string(s.FIELD); }}
#define GX_REAL(KEY, FIELD)                                                        \
  Descriptor{KEY, [](RunSettings& s, std::string_view v) { s.FIELD = to_real(v); }, \
             [](const RunSettings& s) { return format_double(s.FIELD); }}
#define GX_BOOL(KEY, FIELD)                                                        \
  Descriptor{KEY, [](RunSettings& s, std::string_view v) { s.FIELD = to_bool(v); }, \
             [](const RunSettings& s) { return from_bool(s.FIELD); }}
#define GX_SEED(KEY, FIELD)                                                              \
  Descriptor{KEY, [](RunSettings& s, std::string_view v) { s.experiment.seeds.FIELD = to_u64(v); }, \
             [](const RunSettings& s) { return std::to_string(s.experiment.seeds.FIELD##_seed()); }}

const std::vector<Descriptor>& descriptors() {
  static const std::vector<Descriptor> table = {
      GX_COUNT("catalog_size", experiment.catalog_size),
      GX_COUNT("topic_count", experiment.topic_count),
      GX_COUNT("feature_dim", experiment.feature_dim),
      GX_REAL("topic_noise", experiment.topic_noise),
      GX_REAL("clickbait_fraction", experiment.clickbait_fraction),
      GX_REAL("unseen_fraction", experiment.unseen_fraction),
      GX_COUNT("user_count", experiment.user_count),
      GX_REAL("user_noise", experiment.user_noise),
      GX_COUNT("warmup_sessions", experiment.warmup_sessions),
      GX_COUNT("rounds", experiment.rounds),
      GX_COUNT("feed_size", experiment.feed_size),
      GX_COUNT("retrieval_size", experiment.retrieval_size),
      GX_COUNT("rank_size", experiment.rank_size),
      GX_COUNT("random_candidates", experiment.random_candidates),
      GX_REAL("ranker_noise", experiment.ranker_noise),
      Descriptor{"reranker",
                 [](RunSettings& s, std::string_view v) {
                   auto r = parse_reranker(v);
                   if (!r)
                     throw std::invalid_argument(
                         "unknown reranker (none, rule, fast_dpp_semantic, p_dpp, ours)");
                   s.experiment.reranker = *r;
                 },
                 [](const RunSettings& s) { return std::string(to_string(s.experiment.reranker)); }},
      GX_BOOL("graph_update", experiment.graph_update),
      GX_COUNT("exclusion_rounds", experiment.exclusion_rounds),
      GX_COUNT("window_rounds", experiment.window_rounds),
      GX_COUNT("history_size", experiment.history_size),
      GX_COUNT("rule_topic_cap", experiment.rule_topic_cap),
      GX_REAL("semantic_similarity", experiment.semantic_similarity),
      GX_COUNT("rd_max_items", experiment.rd_max_items),
      GX_BOOL("feature_metrics", experiment.feature_metrics),
      GX_COUNT("threads", experiment.threads),
      GX_REAL("feedback.relevance_weight", experiment.feedback.relevance_weight),
      GX_REAL("feedback.novelty_weight", experiment.feedback.novelty_weight),
      GX_REAL("feedback.position_penalty", experiment.feedback.position_penalty),
      GX_REAL("propensity.f_min", experiment.propensity.f_min),
      GX_REAL("propensity.f_max", experiment.propensity.f_max),
      GX_BOOL("propensity.literal_eq2", experiment.propensity.literal_eq2),
      GX_BOOL("rerank.stop_at_nonpositive_gain", experiment.rerank.stop_at_nonpositive_gain),
      Descriptor{"train.dims",
                 [](RunSettings& s, std::string_view v) { s.experiment.train.dims = to_count_list(v); },
                 [](const RunSettings& s) { return from_list(s.experiment.train.dims); }},
      Descriptor{"train.fanouts",
                 [](RunSettings& s, std::string_view v) { s.experiment.train.fanouts = to_count_list(v); },
                 [](const RunSettings& s) { return from_list(s.experiment.train.fanouts); }},
      GX_COUNT("train.walk_length", experiment.train.walk_length),
      GX_COUNT("train.context_size", experiment.train.context_size),
      GX_COUNT("train.negatives", experiment.train.negatives),
      GX_COUNT("train.epochs", experiment.train.epochs),
      GX_COUNT("train.incremental_epochs", experiment.train.incremental_epochs),
      GX_BOOL("train.full_retrain", experiment.train.full_retrain),
      GX_REAL("train.learning_rate", experiment.train.learning_rate),
      GX_REAL("train.temperature", experiment.train.temperature),
      Descriptor{"seed",
                 [](RunSettings& s, std::string_view v) { s.experiment.seeds.base = to_u64(v); },
                 [](const RunSettings& s) { return std::to_string(s.experiment.seeds.base); }},
      GX_SEED("seed.catalog", catalog),
      GX_SEED("seed.users", users),
      GX_SEED("seed.ranker", ranker),
      GX_SEED("seed.feedback", feedback),
      GX_SEED("seed.walks", walks),
      GX_SEED("seed.labels", labels),
      Descriptor{"graph_snapshot",
                 [](RunSettings& s, std::string_view v) { s.graph_snapshot = std::string(v); },
                 [](const RunSettings& s) { return s.graph_snapshot.string(); }},
  };
  return table;
}

#undef GX_COUNT
#undef GX_REAL
#undef GX_BOOL
#undef GX_SEED

}  // namespace

std::vector<ConfigEntry> parse_config(std::istream& in) {
  std::vector<ConfigEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected 'key = value'", line_no);
    const auto key = trim(view.substr(0, eq));
    const auto value = trim(view.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    out.push_back({std::string(key), std::string(value), line_no});
  }
  return out;
}

std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_config(in);
}

ConfigEntry parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(text, "override must look like KEY=VALUE");
  return {std::string(trim(std::string_view(text).substr(0, eq))),
          std::string(trim(std::string_view(text).substr(eq + 1))), 0};
}

void apply_setting(RunSettings& settings, const std::string& key,
                   const std::string& value) {
  for (const auto& d : descriptors()) {
    if (key != d.key) continue;
    try {
      d.set(settings, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, std::string(e.what()) + ", got '" + value + "'");
    }
    return;
  }
  throw ConfigError(key, "unknown configuration key");
}

std::string env_var_name(const std::string& key) {
  std::string name = "GRAPHEX_";
  for (char c : key) {
    if (c == '.')
      name += "__";
    else
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

void apply_environment(RunSettings& settings) {
  for (const auto& d : descriptors()) {
    const std::string key = d.key;
    if (const char* v = std::getenv(env_var_name(key).c_str())) apply_setting(settings, key, v);
  }
}

std::vector<std::pair<std::string, std::string>> effective_settings(
    const RunSettings& settings) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& d : descriptors()) out.emplace_back(d.key, d.get(settings));
  return out;
}

}  // namespace graphex
