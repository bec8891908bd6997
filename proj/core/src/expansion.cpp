#include "facetset/expansion.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "facetset/errors.hpp"
#include "facetset/parallel.hpp"

namespace facetset {

double ScoreMatrix::at(std::string_view candidate, std::size_t column) const {
  const auto& col = columns.at(column);
  auto it = std::lower_bound(col.begin(), col.end(), candidate,
                             [](const auto& entry, std::string_view c) { return entry.first < c; });
  return it != col.end() && it->first == candidate ? it->second : 0.0;
}

bool ScoreMatrix::empty() const {
  return std::all_of(columns.begin(), columns.end(), [](const auto& c) { return c.empty(); });
}

ScoreMatrix score_corpus(const CorpusIndex& index, const ScoreRequest& request) {
  ScoreMatrix m;
  m.columns.resize(request.skipgrams.size());
  for (std::size_t j = 0; j < request.skipgrams.size(); ++j) {
    const auto sid = index.find_skipgram(request.skipgrams[j]);
    if (!sid) continue;
    const auto occupants = index.occupants_of(*sid);
    std::uint64_t total = 0;
    for (const auto& p : occupants) total += p.count;
    if (total == 0) continue;
    auto& col = m.columns[j];
    for (const auto& p : occupants)
      col.emplace_back(index.entity_name(p.id), static_cast<double>(p.count) / static_cast<double>(total));
    std::sort(col.begin(), col.end());
  }
  return m;
}

ScoreMatrix score_mlm(SidecarClient& client, const ScoreRequest& request, const CorpusIndex* index) {
  std::vector<std::string> texts;
  texts.reserve(request.skipgrams.size());
  for (const auto& sg : request.skipgrams) texts.push_back(slot_text(sg));
  const auto replies = client.score(texts, static_cast<int>(request.top_k));

  ScoreMatrix m;
  m.columns.resize(request.skipgrams.size());
  for (std::size_t j = 0; j < replies.size(); ++j) {
    if (!replies[j]) continue;
    std::map<std::string, double> col;
    for (const auto& [token, p] : *replies[j]) {
      if (p <= 0.0) continue;
      if (request.scope == CandidateScope::index && index && !index->find_entity(token)) continue;
      col[token] += p;
    }
    m.columns[j].assign(col.begin(), col.end());
  }
  return m;
}

std::string normalize_seed(std::string_view seed) {
  const auto toks = tokenize(seed);
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += '_';
    out += toks[i];
  }
  return out;
}

FacetExpansion expand_facet(const CoherentFacet& facet, Scorer& scorer, const std::vector<std::string>& seeds,
                            const ExpansionOptions& options, const CorpusIndex* index) {
  if (facet.members.empty()) throw std::invalid_argument("expand_facet: empty facet");
  if (options.top_n < 1) throw ConfigError("top_n must be >= 1");

  FacetExpansion out;
  out.scorer = scorer.name();
  out.seeds_covered = facet.seeds_covered;
  out.occurrence_count = facet.total_count();

  ScoreRequest request;
  request.scope = options.scope;
  request.top_k = options.top_k;
  request.skipgrams = facet.distinct_skipgrams();
  out.skipgram_count = request.skipgrams.size();

  std::unordered_map<std::string, double> multiplicity;
  if (options.frequency_weighted)
    for (const auto& m : facet.members) multiplicity[m.member.skipgram.canonical()] += static_cast<double>(m.member.count);

  const ScoreMatrix matrix = scorer.score(request);
  std::unordered_set<std::string> excluded;
  for (const auto& s : seeds) excluded.insert(normalize_seed(s));

  std::map<std::string, double> weight;
  for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
    const double mult = options.frequency_weighted ? multiplicity[request.skipgrams[j]] : 1.0;
    for (const auto& [cand, h] : matrix.columns[j])
      if (!excluded.count(cand)) weight[cand] += mult * h;
  }

  std::vector<std::pair<std::string, double>> ranked;
  for (auto& [cand, w] : weight)
    if (w > 0.0) ranked.emplace_back(cand, w);
  if (ranked.empty()) throw EmptyExpansion("no candidate scored above zero");

  auto freq = [&](const std::string& c) -> std::uint64_t {
    if (!index) return 0;
    const auto id = index->find_entity(c);
    return id ? index->entity_frequency(*id) : 0;
  };
  std::sort(ranked.begin(), ranked.end(), [&](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    const auto fx = freq(x.first), fy = freq(y.first);
    if (fx != fy) return fx > fy;
    return x.first < y.first;
  });
  if (ranked.size() > options.top_n) ranked.resize(options.top_n);
  out.entities = std::move(ranked);
  return out;
}

QueryResult expand_query(const std::vector<std::string>& query, const CorpusIndex& index,
                         const EmbeddingTable& table, const QueryConfig& config, Scorer* scorer) {
  if (query.empty()) throw std::invalid_argument("expand_query: empty query");
  QueryResult result;
  for (const auto& s : query) {
    auto seed = normalize_seed(s);
    if (!index.find_entity(seed)) throw UnknownEntity(seed.empty() ? std::string(s) : seed);
    result.query.push_back(std::move(seed));
  }

  const std::size_t n = result.query.size();
  std::vector<SeedClustering> per_seed(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    per_seed[i] = cluster_seed(index, table, result.query[i], config.clustering);
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!per_seed[i].affinity.converged)
      result.warnings.push_back("affinity propagation did not converge for '" + result.query[i] + "'");
    result.affinity.push_back(per_seed[i].affinity);
    result.clusters.emplace_back(result.query[i], std::move(per_seed[i].clusters));
  }

  FusionConfig fusion = config.fusion;
  fusion.threads = config.threads;
  auto facets = fuse_all(result.clusters, fusion, &result.trace);
  std::stable_sort(facets.begin(), facets.end(),
                   [](const CoherentFacet& a, const CoherentFacet& b) { return a.total_count() > b.total_count(); });

  CorpusScorer corpus(index);
  Scorer& active = scorer ? *scorer : corpus;
  // The sidecar client is a single connection; only the corpus scorer is
  // safe to drive from several threads.
  const std::size_t threads = scorer ? 1 : config.threads;
  std::vector<std::optional<FacetExpansion>> expanded(facets.size());
  std::vector<std::string> failures(facets.size());
  parallel_for(facets.size(), threads, [&](std::size_t i) {
    try {
      expanded[i] = expand_facet(facets[i], active, result.query, config.expansion, &index);
    } catch (const EmptyExpansion& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < facets.size(); ++i) {
    if (!expanded[i]) {
      result.warnings.push_back("facet " + std::to_string(i) + " dropped: " + failures[i]);
      continue;
    }
    expanded[i]->facet_id = result.facets.size();
    result.facets.push_back(std::move(*expanded[i]));
  }
  return result;
}

nlohmann::json expansion_to_json(const QueryResult& result) {
  nlohmann::json j;
  j["query"] = result.query;
  j["facets"] = nlohmann::json::array();
  for (const auto& f : result.facets) {
    nlohmann::json jf;
    jf["id"] = f.facet_id;
    jf["skipgram_count"] = f.skipgram_count;
    jf["occurrence_count"] = f.occurrence_count;
    jf["scorer"] = f.scorer;
    jf["entities"] = nlohmann::json::array();
    for (const auto& [e, w] : f.entities) jf["entities"].push_back({e, w});
    j["facets"].push_back(std::move(jf));
  }
  return j;
}

}  // namespace facetset
