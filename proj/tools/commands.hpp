#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facetset/config.hpp"

namespace facetset::cli {

// Process exit codes. Stable; documented in the README.
enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kIo = 2,
  kUnknownEntity = 3,
  kNoCoherentFacet = 4,
  kSchema = 5,
  kConfig = 6,
  kScorerUnavailable = 7,
};

struct Globals {
  RunConfig config;
  bool json = false;
  bool quiet = false;
};

struct IndexArgs {
  std::filesystem::path corpus;
  std::filesystem::path out;
};

struct ExpandArgs {
  std::filesystem::path index;
  std::filesystem::path embeddings;
  std::string query;  // comma-separated seeds
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> diagnostics;
};

struct EvalArgs {
  std::filesystem::path predictions;
  std::filesystem::path gold;
  std::optional<std::filesystem::path> out;
};

struct SelftestArgs {
  int affinity_instances = 50;
  int correlation_instances = 20;
};

int cmd_index(const Globals& g, const IndexArgs& a);
int cmd_expand(const Globals& g, const ExpandArgs& a);
int cmd_eval(const Globals& g, const EvalArgs& a);
int cmd_selftest(const Globals& g, const SelftestArgs& a);

// Maps the exception in flight to an exit code, logging it to stderr.
int report_current_exception();

std::vector<std::string> split_query(const std::string& query);

}  // namespace facetset::cli
