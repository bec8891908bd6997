#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "facetset/corpus.hpp"
#include "facetset/expansion.hpp"

namespace facetset {

// Every tunable of the pipeline. Sources apply in order defaults < file <
// overrides; unknown keys and out-of-range values throw ConfigError.
struct RunConfig {
  // corpus
  std::size_t window = 2;
  std::uint64_t min_frequency = 3;
  std::string stop_words_path;  // empty: built-in list
  // clustering
  std::size_t max_skipgrams = 500;
  bool include_stop_only = false;
  SimilarityMetric metric = SimilarityMetric::neg_sq_euclidean;
  std::optional<double> preference = -60.0;  // nullopt: median similarity
  double damping = 0.9;
  int max_iter = 1000;
  int stable_iters = 50;
  std::uint64_t random_seed = 0;
  // fusion
  double ridge_scale = 1e-3;
  bool centered = false;
  double threshold = 0.25;
  double raw_threshold = 0.5;
  double softmax_base = kDefaultSoftmaxBase;
  // expansion
  std::string scorer = "corpus";  // corpus | mlm
  std::string sidecar;            // endpoint, see SidecarEndpoint
  int sidecar_timeout_ms = 30000;
  bool scorer_fallback = true;
  std::size_t top_k = 200;
  std::size_t top_n = 20;
  CandidateScope candidate_scope = CandidateScope::index;
  bool frequency_weighted = false;
  // evaluation
  std::vector<std::size_t> cutoffs = {5, 10, 20};
  // execution; never echoed, results do not depend on it
  std::size_t threads = 1;

  // e^5: with correlations confined to [0, 1], softmax at base e cannot push
  // the KL score past ~0.12, below the 0.25 threshold.
  static constexpr double kDefaultSoftmaxBase = 148.4131591025766;

  void set(std::string_view key, std::string_view value);
  void load_file(const std::filesystem::path& path);
  // "key=value"
  void apply_override(std::string_view assignment);

  IndexConfig index_config() const;
  QueryConfig query_config() const;
  // All keys except `threads`, for echoing into outputs.
  nlohmann::json to_json() const;

  static const std::vector<std::string>& keys();
};

}  // namespace facetset
