#include "graphex/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphex/config.hpp"
#include "graphex/embedding.hpp"
#include "graphex/simulator.hpp"
#include "graphex/util.hpp"

namespace graphex {

namespace {

// A usage/config problem: exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::size_t threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts, const std::string& default_out) {
  opts.out_dir = default_out;
  cmd->add_option("--config", opts.config, "Key-value configuration file");
  cmd->add_option("--override", opts.overrides, "KEY=VALUE, repeatable; wins over file and env")
      ->allow_extra_args(false);
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--threads", opts.threads, "Worker threads (1 = deterministic)");
}

// defaults < config file < environment < --override < --threads
RunSettings load_settings(const CommonOptions& opts) {
  RunSettings settings;
  try {
    if (!opts.config.empty()) {
      if (!std::filesystem::exists(opts.config))
        throw UsageError("config file not found: " + opts.config);
      for (const auto& e : read_config_file(opts.config)) apply_setting(settings, e.key, e.value);
    }
    apply_environment(settings);
    for (const auto& o : opts.overrides) {
      const auto e = parse_override(o);
      apply_setting(settings, e.key, e.value);
    }
    if (opts.threads > 0) {
      settings.experiment.threads = opts.threads;
      settings.experiment.train.threads = opts.threads;
    }
    settings.experiment.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw UsageError(std::string("invalid configuration key ") + e.what());
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  } catch (const ParseError& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
  return settings;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

nlohmann::json manifest_base(const std::string& command, const RunSettings& settings) {
  nlohmann::json m;
  m["tool"] = "graphex";
  m["version"] = kToolVersion;
  m["command"] = command;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : effective_settings(settings)) cfg[k] = v;
  m["config"] = cfg;
  const auto& s = settings.experiment.seeds;
  m["seeds"] = {{"base", s.base},           {"catalog", s.catalog_seed()},
                {"users", s.users_seed()},  {"ranker", s.ranker_seed()},
                {"feedback", s.feedback_seed()}, {"walks", s.walks_seed()},
                {"labels", s.labels_seed()}};
  m["start_time"] = utc_now();
  m["end_time"] = nullptr;
  m["status"] = "running";
  return m;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_train_embeddings(const CommonOptions& opts, std::ostream& out) {
  RunSettings settings = load_settings(opts);
  if (settings.graph_snapshot.empty())
    throw UsageError("graph_snapshot is not set");
  if (!std::filesystem::exists(settings.graph_snapshot))
    throw UsageError("graph snapshot not found: " + settings.graph_snapshot.string());
  ItemGraph graph;
  try {
    graph = load_snapshot(settings.graph_snapshot);
  } catch (const ParseError& e) {
    throw UsageError("graph snapshot " + settings.graph_snapshot.string() + ": " + e.what());
  }
  TrainConfig train = settings.experiment.train;
  train.seed = settings.experiment.seeds.walks_seed();
  const auto result = train_unsupervised(graph, train);

  const std::filesystem::path dir = opts.out_dir;
  std::filesystem::create_directories(dir);
  save_table(result.table, dir / "embeddings.tsv");
  save_weights(result.weights, dir / "weights.tsv");
  out << "trained " << result.table.size() << " embeddings (dim " << result.table.dim()
      << "), final loss " << format_fixed(result.epoch_losses.back(), 6) << '\n';
  return kExitOk;
}

int cmd_simulate(const CommonOptions& opts, std::ostream& out) {
  RunSettings settings = load_settings(opts);
  const std::filesystem::path dir = opts.out_dir;
  std::filesystem::create_directories(dir);

  nlohmann::json manifest = manifest_base("simulate", settings);
  manifest["artifacts"] = {{"metrics", (dir / "metrics.csv").string()},
                           {"graph", (dir / "graph.tsv").string()},
                           {"embeddings", (dir / "embeddings.tsv").string()},
                           {"weights", (dir / "weights.tsv").string()}};
  write_json(dir / "manifest.json", manifest);

  try {
    const auto result = run_experiment(settings.experiment, dir);
    manifest["status"] = "ok";
    manifest["rounds_completed"] = result.reports.size();
    manifest["end_time"] = utc_now();
    write_json(dir / "manifest.json", manifest);
    const auto& last = result.reports.back();
    out << "simulated " << result.reports.size() << " rounds; final ilad "
        << format_fixed(last.ilad, 6) << " rd " << format_fixed(last.rd, 6) << " coverage "
        << format_fixed(last.coverage, 6) << '\n';
  } catch (const std::exception& e) {
    manifest["status"] = std::string("failed: ") + e.what();
    manifest["end_time"] = utc_now();
    write_json(dir / "manifest.json", manifest);
    throw;
  }
  return kExitOk;
}

int cmd_rerank(const std::string& instance_path, std::ostream& out) {
  std::ifstream in(instance_path);
  if (!in) throw UsageError("cannot open instance " + instance_path);
  RerankInstance inst;
  try {
    inst = parse_rerank_instance(in);
  } catch (const ParseError& e) {
    throw UsageError(std::string("malformed instance: ") + e.what());
  }
  RerankConfig config;
  if (inst.propensity < config.f_min || inst.propensity > config.f_max)
    throw UsageError("f must lie in [" + format_double(config.f_min) + ", " +
                     format_double(config.f_max) + "]");
  RerankInput input;
  for (Eigen::Index i = 0; i < inst.scores.size(); ++i)
    input.items.push_back(static_cast<ItemId>(i));
  input.scores = inst.scores;
  input.similarity = inst.similarity;
  input.propensity = inst.propensity;
  input.k = inst.k;
  try {
    validate_rerank_input(input, config);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("invalid instance: ") + e.what());
  }
  for (ItemId i : rerank(input, config)) out << i << '\n';
  return kExitOk;
}

std::string lift_text(double base, double value) {
  if (base == 0.0 || !std::isfinite(base) || !std::isfinite(value)) return "n/a";
  return format_fixed(100.0 * (value - base) / base, 3) + "%";
}

int cmd_report(const std::vector<std::string>& csvs, const std::string& out_dir,
               std::ostream& out) {
  if (csvs.empty()) throw UsageError("report needs at least one CSV");
  std::vector<MetricsTable> tables;
  for (const auto& path : csvs) {
    if (!std::filesystem::exists(path)) throw UsageError("CSV not found: " + path);
    try {
      tables.push_back(read_metrics_csv(path));
    } catch (const ParseError& e) {
      throw UsageError(path + ": " + e.what());
    }
    if (tables.back().columns != tables.front().columns)
      throw UsageError("header mismatch between " + csvs.front() + " and " + path);
  }
  const auto& columns = tables.front().columns;
  std::size_t first_metric = (!columns.empty() && columns.front() == "round") ? 1 : 0;

  auto column_mean = [](const MetricsTable& t, std::size_t c) {
    if (t.rows.empty()) return std::nan("");
    double sum = 0.0;
    for (const auto& r : t.rows) sum += r[c];
    return sum / static_cast<double>(t.rows.size());
  };

  out << std::left << std::setw(14) << "metric" << std::setw(14) << "base";
  for (std::size_t t = 1; t < tables.size(); ++t)
    out << std::setw(14) << ("run" + std::to_string(t)) << std::setw(12) << ("lift" + std::to_string(t));
  out << '\n';
  for (std::size_t c = first_metric; c < columns.size(); ++c) {
    const double base = column_mean(tables.front(), c);
    out << std::setw(14) << columns[c] << std::setw(14) << format_fixed(base, 6);
    for (std::size_t t = 1; t < tables.size(); ++t) {
      const double v = column_mean(tables[t], c);
      out << std::setw(14) << format_fixed(v, 6) << std::setw(12) << lift_text(base, v);
    }
    out << '\n';
  }

  const std::filesystem::path dir = out_dir;
  std::filesystem::create_directories(dir);
  std::size_t max_rows = 0;
  for (const auto& t : tables) max_rows = std::max(max_rows, t.rows.size());
  for (std::size_t c = first_metric; c < columns.size(); ++c) {
    std::ofstream series(dir / (columns[c] + ".dat"), std::ios::binary);
    if (!series) throw Error("cannot write series for " + columns[c]);
    series << "# round";
    for (const auto& path : csvs) series << ' ' << std::filesystem::path(path).stem().string();
    series << '\n';
    for (std::size_t r = 0; r < max_rows; ++r) {
      const auto& ref = tables.front().rows.size() > r ? tables.front() : tables.back();
      series << (first_metric == 1 && r < ref.rows.size() ? format_double(ref.rows[r][0])
                                                          : std::to_string(r + 1));
      for (const auto& t : tables)
        series << ' ' << (r < t.rows.size() ? format_fixed(t.rows[r][c], 6) : "NaN");
      series << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

RerankInstance parse_rerank_instance(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) lines.push_back(line);
  if (lines.empty()) throw ParseError("empty instance", 1);

  const auto header = split_whitespace(lines[0]);
  if (header.size() != 3) throw ParseError("header must be 'n k f'", 1);
  std::uint64_t n = 0, k = 0;
  double f = 0;
  if (!parse_uint64(header[0], n) || !parse_uint64(header[1], k) || !parse_double(header[2], f))
    throw ParseError("header must be 'n k f'", 1);
  if (n == 0) throw ParseError("n must be >= 1", 1);
  if (k > n) throw ParseError("k must not exceed n", 1);
  if (lines.size() != n + 2)
    throw ParseError("expected " + std::to_string(n + 2) + " non-empty lines, got " +
                         std::to_string(lines.size()),
                     lines.size());

  auto row = [&](std::size_t li) {
    const auto toks = split_whitespace(lines[li]);
    if (toks.size() != n)
      throw ParseError("expected " + std::to_string(n) + " values", li + 1);
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      if (!parse_double(toks[i], v[static_cast<Eigen::Index>(i)]))
        throw ParseError("bad number '" + std::string(toks[i]) + "'", li + 1);
    return v;
  };

  RerankInstance inst;
  inst.k = k;
  inst.propensity = f;
  inst.scores = row(1);
  inst.similarity.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r)
    inst.similarity.row(static_cast<Eigen::Index>(r)) = row(r + 2).transpose();
  return inst;
}

MetricsTable read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  MetricsTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    if (table.columns.empty()) {
      for (auto f : fields) table.columns.emplace_back(trim(f));
      continue;
    }
    if (fields.size() != table.columns.size())
      throw ParseError("row width differs from header", line_no);
    std::vector<double> row;
    for (auto f : fields) {
      double v = 0;
      if (!parse_double(trim(f), v)) throw ParseError("bad number '" + std::string(f) + "'", line_no);
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) throw ParseError("missing header", 1);
  return table;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-exploration diversified recommendation toolkit", "graphex"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions train_opts, sim_opts;
  auto* train = app.add_subcommand("train-embeddings", "Train item embeddings on a graph snapshot");
  add_common(train, train_opts, ".");
  auto* simulate = app.add_subcommand("simulate", "Run a closed-loop recommendation experiment");
  add_common(simulate, sim_opts, "out");

  std::string instance;
  auto* rerank_cmd = app.add_subcommand("rerank", "Rerank one matrix-text instance");
  rerank_cmd->add_option("instance", instance, "Instance file")->required();

  std::vector<std::string> csvs;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "Compare metric CSVs against the first one");
  report->add_option("csv", csvs, "Metrics CSV files; the first is the base")->required();
  report->add_option("--out", report_out, "Directory for plot series");

  std::vector<const char*> argv{"graphex"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train_embeddings(train_opts, out);
    if (*simulate) return cmd_simulate(sim_opts, out);
    if (*rerank_cmd) return cmd_rerank(instance, out);
    if (*report) return cmd_report(csvs, report_out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace graphex
