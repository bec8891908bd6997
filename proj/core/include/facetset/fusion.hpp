#pragma once

#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "facetset/clustering.hpp"

namespace facetset {

struct CcaResult {
  double corr = 0.0;  // top canonical correlation clamped to [0, 1]
  double raw = 0.0;   // unclamped top singular value
  Eigen::VectorXd a;  // coefficients over X's columns
  Eigen::VectorXd b;  // coefficients over Y's columns
  Eigen::VectorXd u;  // sense vector X a
  Eigen::VectorXd v;  // sense vector Y b
};

// Ridge-regularized canonical correlation between the column sets of X (d x m)
// and Y (d x n):
//   max a'X'Yb  s.t.  a'(X'X + eps I)a = 1,  b'(Y'Y + eps I)b = 1.
// `centered` subtracts each column's coordinate mean first.
// Throws DimensionError if X and Y disagree on d, std::invalid_argument if
// ridge <= 0 or either matrix has no columns.
CcaResult cluster_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge,
                              bool centered = false);

// scale * mean squared column norm over both sets.
double relative_ridge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double scale);

struct CorrelationOptions {
  double ridge_scale = 1e-3;
  bool centered = false;
};

double pair_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const CorrelationOptions& options);

struct RelevanceOptions {
  double threshold = 0.25;      // on the KL score, when the other seed has >= 2 facets
  double raw_threshold = 0.5;   // on the raw correlation, when it has exactly 1
  double softmax_base = std::numbers::e;    // softmax weights are base^corr
};

struct RelevanceDecision {
  std::vector<double> correlations;
  std::vector<double> softmaxed;
  double rele = 0.0;
  std::optional<std::size_t> matched;
  bool single_facet_fallback = false;
};

// Softmax with weights base^x_i, computed max-subtracted.
std::vector<double> softmax(std::span<const double> x, double base = std::numbers::e);

// KL(softmax(corr) || uniform) in nats and the matching decision.
RelevanceDecision decide_relevance(std::span<const double> correlations, const RelevanceOptions& options = {});

RelevanceDecision relevance(const Eigen::MatrixXd& facet, std::span<const Eigen::MatrixXd> others,
                            const RelevanceOptions& options = {}, const CorrelationOptions& correlation = {});

struct FacetMember {
  std::string seed;  // provenance
  ClusterMember member;
};

// A skip-gram cluster shared by every seed processed so far.
struct CoherentFacet {
  std::vector<FacetMember> members;
  std::vector<std::string> seeds_covered;

  Eigen::MatrixXd matrix() const;
  std::uint64_t total_count() const;
  // Distinct canonical skip-grams, first-seen order.
  std::vector<std::string> distinct_skipgrams() const;
};

CoherentFacet lift(const SkipGramCluster& cluster);

struct FusionConfig {
  RelevanceOptions relevance;
  CorrelationOptions correlation;
  std::size_t threads = 1;
};

struct FusionStep {
  std::string seed;
  // correlations[i][j]: reference facet i vs cluster j of `seed`.
  std::vector<std::vector<double>> correlations;
  std::vector<RelevanceDecision> decisions;
  std::size_t surviving = 0;
};

struct FusionTrace {
  std::vector<std::string> seed_order;
  std::vector<FusionStep> steps;

  nlohmann::json to_json() const;
};

// Matches every reference facet against the current seed's clusters. A
// matched facet is unioned with its best cluster; unmatched facets are
// dropped. Clusters may be claimed by several facets.
std::vector<CoherentFacet> fuse_pair(const std::vector<CoherentFacet>& reference,
                                     const std::vector<SkipGramCluster>& current, const FusionConfig& config = {},
                                     FusionStep* step = nullptr);

using SeedClusters = std::pair<std::string, std::vector<SkipGramCluster>>;

// Left fold of fuse_pair over seeds in the given order. Throws
// NoCoherentFacet (carrying the trace as JSON) if the fold empties.
std::vector<CoherentFacet> fuse_all(const std::vector<SeedClusters>& per_seed, const FusionConfig& config = {},
                                    FusionTrace* trace = nullptr);

}  // namespace facetset
