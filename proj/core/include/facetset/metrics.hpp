#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

namespace facetset {

using EntitySet = std::unordered_set<std::string>;
using RankedList = std::vector<std::string>;

struct GoldQuery {
  std::string query_id;
  std::vector<std::string> seeds;
  std::vector<EntitySet> facets;
};

struct PredictedQuery {
  std::string query_id;
  std::vector<std::string> seeds;
  std::vector<RankedList> facets;
};

// Lowercase, whitespace runs collapsed to '_'.
std::string normalize_entity(std::string_view entity);

// Average precision over the top min(l, |ranked|) items, normalized by
// min(l, |gold|). Throws std::invalid_argument on empty gold or l < 1.
double ap_at_l(std::span<const std::string> ranked, const EntitySet& gold, std::size_t l);

// Recall-like: mean over gold facets of the best AP among predicted facets.
double mmap(const PredictedQuery& pred, const GoldQuery& gold, std::size_t l);
// Precision-like: mean over predicted facets of the best AP against any gold facet.
double pmap(const PredictedQuery& pred, const GoldQuery& gold, std::size_t l);
// 2ab / (a + b); 0 when either side is 0.
double harmonic_mean(double a, double b);
double bmap(const PredictedQuery& pred, const GoldQuery& gold, std::size_t l);

struct FacetCountDistance {
  double l1 = 0.0;
  double l2 = 0.0;
};

FacetCountDistance facet_count_distance(std::span<const std::size_t> gold_counts,
                                        std::span<const std::size_t> predicted_counts);

struct CutoffScores {
  std::size_t cutoff = 0;
  double mmap = 0.0;
  double pmap = 0.0;
  double bmap = 0.0;
};

struct QueryScores {
  std::string query_id;
  std::size_t gold_facets = 0;
  std::size_t predicted_facets = 0;
  std::vector<CutoffScores> per_cutoff;
};

struct EvalReport {
  std::vector<CutoffScores> overall;  // macro-averaged over queries
  FacetCountDistance facet_count;
  std::vector<QueryScores> queries;

  nlohmann::json to_json() const;
  // Aligned columns: MMAP@l... | PMAP@l... | BMAP@l...
  std::string to_table() const;
};

// Predictions are matched to gold queries by query id when present,
// otherwise by a non-empty seed list whose prediction carries no other id.
// Gold queries without predictions score 0.
EvalReport evaluate(std::span<const GoldQuery> gold, std::span<const PredictedQuery> predictions,
                    std::span<const std::size_t> cutoffs);

// Gold: [{query_id, seeds:[...], facets:[[entity,...],...]}, ...].
// Predictions: one expansion output object or an array of them; each may
// carry "query_id". Entities are [entity, weight] pairs or bare strings.
// Throw SchemaError with a JSON pointer on violations.
std::vector<GoldQuery> parse_gold(const nlohmann::json& doc);
std::vector<PredictedQuery> parse_predictions(const nlohmann::json& doc);

}  // namespace facetset
