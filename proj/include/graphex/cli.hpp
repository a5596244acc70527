#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "graphex/rerank_dpp.hpp"

namespace graphex {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// Matrix-text rerank instance: "n k f", then n scores, then n rows of n
// similarity values; whitespace separated.
struct RerankInstance {
  std::size_t k = 0;
  double propensity = 0.5;
  Vector scores;
  Matrix similarity;
};

RerankInstance parse_rerank_instance(std::istream& in);

// Columns of a metrics CSV (header plus numeric rows).
struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

MetricsTable read_metrics_csv(const std::filesystem::path& path);

}  // namespace graphex
