#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facetset/corpus.hpp"
#include "facetset/embeddings.hpp"

namespace facetset {

enum class SimilarityMetric { cosine, neg_sq_euclidean };

std::string to_string(SimilarityMetric metric);
SimilarityMetric parse_metric(std::string_view name);

// Dense pairwise similarities with the preference on the diagonal.
struct SimilarityGraph {
  Eigen::MatrixXd s;
  double preference = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(s.rows()); }
};

// labels, when given, name the vectors in DegenerateVector errors.
SimilarityGraph build_similarity(std::span<const std::vector<double>> vectors, SimilarityMetric metric,
                                 double preference, std::span<const std::string> labels = {});

// Median of the off-diagonal entries; 0 for a single node.
double median_off_diagonal(const SimilarityGraph& graph);

struct AffinityOptions {
  double damping = 0.9;
  int max_iter = 1000;
  int stable_iters = 50;
  // Seed for the symmetric tie-breaking perturbation.
  std::uint64_t noise_seed = 0;
};

struct AffinityResult {
  // exemplar_of[i] is the exemplar node that i is assigned to.
  std::vector<std::size_t> exemplar_of;
  // Sorted ascending.
  std::vector<std::size_t> exemplars;
  bool converged = false;
  int iterations = 0;
};

// Frey-Dueck responsibility/availability message passing with damping.
// Stops once the exemplar set has been unchanged for stable_iters
// iterations, or after max_iter. On non-convergence the last exemplar set
// is returned (converged = false). Assignment uses the unperturbed
// similarities.
AffinityResult affinity_propagation(const SimilarityGraph& graph, const AffinityOptions& options = {});

// Net similarity of an assignment: sum over nodes of s(i, exemplar_of[i]),
// which includes the preference for every exemplar.
double net_similarity(const SimilarityGraph& graph, std::span<const std::size_t> exemplar_of);

struct ClusterMember {
  SkipGramId id = 0;
  SkipGram skipgram;
  std::uint64_t count = 0;
  SgEmbedding embedding;
};

// One candidate facet of one seed.
struct SkipGramCluster {
  std::string seed;
  std::vector<ClusterMember> members;
  std::size_t exemplar = 0;  // index into members

  std::uint64_t total_count() const;
  // d x m, columns are member embeddings in member order.
  Eigen::MatrixXd matrix() const;
};

struct ClusteringConfig {
  SimilarityMetric metric = SimilarityMetric::neg_sq_euclidean;
  // nullopt selects the median off-diagonal similarity.
  std::optional<double> preference = -60.0;
  AffinityOptions affinity;
  std::size_t max_skipgrams = 500;
  bool include_stop_only = false;
};

struct SeedClustering {
  std::vector<SkipGramCluster> clusters;
  AffinityResult affinity;
};

// Clusters the embeddable skip-grams of one seed. Clusters come back sorted
// by descending total member count. Throws UnknownEntity or
// NoEmbeddableContext.
SeedClustering cluster_seed(const CorpusIndex& index, const EmbeddingTable& table, std::string_view seed,
                            const ClusteringConfig& config = {});

}  // namespace facetset
