#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "facetset/clustering.hpp"
#include "facetset/corpus.hpp"
#include "facetset/embeddings.hpp"
#include "facetset/fusion.hpp"
#include "facetset/sidecar.hpp"

namespace facetset {

enum class CandidateScope { index, scorer };

struct ScoreRequest {
  std::vector<std::string> skipgrams;  // canonical forms
  CandidateScope scope = CandidateScope::index;
  std::size_t top_k = 200;
};

// Sparse h(c, sg). columns[j] holds (candidate, score) for skipgrams[j],
// sorted by candidate.
struct ScoreMatrix {
  std::vector<std::vector<std::pair<std::string, double>>> columns;

  double at(std::string_view candidate, std::size_t column) const;
  bool empty() const;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual ScoreMatrix score(const ScoreRequest& request) = 0;
};

// h(c, sg) = count(c, sg) / sum_c' count(c', sg). Unknown skip-grams score
// nothing.
ScoreMatrix score_corpus(const CorpusIndex& index, const ScoreRequest& request);

// Slot distributions from the sidecar. With CandidateScope::index, tokens
// outside the index vocabulary are dropped.
ScoreMatrix score_mlm(SidecarClient& client, const ScoreRequest& request, const CorpusIndex* index = nullptr);

class CorpusScorer final : public Scorer {
 public:
  explicit CorpusScorer(const CorpusIndex& index) : index_(index) {}
  std::string name() const override { return "corpus"; }
  ScoreMatrix score(const ScoreRequest& request) override { return score_corpus(index_, request); }

 private:
  const CorpusIndex& index_;
};

class MlmScorer final : public Scorer {
 public:
  MlmScorer(SidecarClient& client, const CorpusIndex* index) : client_(client), index_(index) {}
  std::string name() const override { return "mlm:" + client_.model(); }
  ScoreMatrix score(const ScoreRequest& request) override { return score_mlm(client_, request, index_); }

 private:
  SidecarClient& client_;
  const CorpusIndex* index_;
};

struct FacetExpansion {
  std::size_t facet_id = 0;
  std::vector<std::pair<std::string, double>> entities;  // weight non-increasing
  std::string scorer;
  std::size_t skipgram_count = 0;  // distinct skip-grams in the facet
  std::uint64_t occurrence_count = 0;
  std::vector<std::string> seeds_covered;
};

struct ExpansionOptions {
  std::size_t top_n = 20;
  std::size_t top_k = 200;
  CandidateScope scope = CandidateScope::index;
  // Weight each skip-gram's scores by its occurrence count in the facet.
  bool frequency_weighted = false;
};

// w_c = sum over the facet's distinct skip-grams of h(c, sg). Seeds are
// excluded; ties break by higher corpus frequency, then lexicographically.
// Throws EmptyExpansion if no candidate scores above zero.
FacetExpansion expand_facet(const CoherentFacet& facet, Scorer& scorer, const std::vector<std::string>& seeds,
                            const ExpansionOptions& options = {}, const CorpusIndex* index = nullptr);

struct QueryConfig {
  ClusteringConfig clustering;
  FusionConfig fusion;
  ExpansionOptions expansion;
  std::size_t threads = 1;
};

struct QueryResult {
  std::vector<std::string> query;
  std::vector<FacetExpansion> facets;  // by descending occurrence count
  std::vector<SeedClusters> clusters;
  std::vector<AffinityResult> affinity;
  FusionTrace trace;
  std::vector<std::string> warnings;
};

// Lowercases and joins multiword seeds with '_' so they match index tokens.
std::string normalize_seed(std::string_view seed);

// Cluster every seed, fuse in seed order, expand every coherent facet.
// `scorer` defaults to the corpus scorer. Propagates UnknownEntity,
// NoEmbeddableContext and NoCoherentFacet.
QueryResult expand_query(const std::vector<std::string>& query, const CorpusIndex& index,
                         const EmbeddingTable& table, const QueryConfig& config = {}, Scorer* scorer = nullptr);

// {query, facets:[{id, skipgram_count, entities:[[entity, weight], ...]}]}
nlohmann::json expansion_to_json(const QueryResult& result);

}  // namespace facetset
