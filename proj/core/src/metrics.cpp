#include "facetset/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "facetset/errors.hpp"

namespace facetset {

std::string normalize_entity(std::string_view entity) {
  std::string out;
  bool pending_sep = false;
  for (char c : entity) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) out += '_';
    pending_sep = false;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

double ap_at_l(std::span<const std::string> ranked, const EntitySet& gold, std::size_t l) {
  if (l < 1) throw std::invalid_argument("ap_at_l: cutoff must be >= 1");
  if (gold.empty()) throw std::invalid_argument("ap_at_l: empty gold set");
  const std::size_t depth = std::min(l, ranked.size());
  std::size_t hits = 0;
  double sum = 0.0;
  EntitySet seen;
  for (std::size_t k = 0; k < depth; ++k) {
    if (gold.count(ranked[k]) && seen.insert(ranked[k]).second) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(std::min(l, gold.size()));
}

double mmap(const PredictedQuery& pred, const GoldQuery& gold, std::size_t l) {
  if (gold.facets.empty()) throw std::invalid_argument("mmap: gold query without facets");
  if (pred.facets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : gold.facets) {
    double best = 0.0;
    for (const auto& b : pred.facets) best = std::max(best, ap_at_l(b, g, l));
    total += best;
  }
  return total / static_cast<double>(gold.facets.size());
}

double pmap(const PredictedQuery& pred, const GoldQuery& gold, std::size_t l) {
  if (gold.facets.empty()) throw std::invalid_argument("pmap: gold query without facets");
  if (pred.facets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& b : pred.facets) {
    double best = 0.0;
    for (const auto& g : gold.facets) best = std::max(best, ap_at_l(b, g, l));
    total += best;
  }
  return total / static_cast<double>(pred.facets.size());
}

double harmonic_mean(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

double bmap(const PredictedQuery& pred, const GoldQuery& gold, std::size_t l) {
  return harmonic_mean(mmap(pred, gold, l), pmap(pred, gold, l));
}

FacetCountDistance facet_count_distance(std::span<const std::size_t> gold_counts,
                                        std::span<const std::size_t> predicted_counts) {
  if (gold_counts.size() != predicted_counts.size())
    throw std::invalid_argument("facet_count_distance: query count mismatch");
  FacetCountDistance d;
  double sq = 0.0;
  for (std::size_t q = 0; q < gold_counts.size(); ++q) {
    const double diff = std::abs(static_cast<double>(gold_counts[q]) - static_cast<double>(predicted_counts[q]));
    d.l1 += diff;
    sq += diff * diff;
  }
  d.l2 = std::sqrt(sq);
  return d;
}

namespace {

std::string seed_key(const std::vector<std::string>& seeds) {
  std::string key;
  for (const auto& s : seeds) key += normalize_entity(s) + "\x1f";
  return key;
}

}  // namespace

EvalReport evaluate(std::span<const GoldQuery> gold, std::span<const PredictedQuery> predictions,
                    std::span<const std::size_t> cutoffs) {
  if (cutoffs.empty()) throw std::invalid_argument("evaluate: no cutoffs");
  std::map<std::string, const PredictedQuery*> by_id, by_seeds;
  for (const auto& p : predictions) {
    if (!p.query_id.empty()) by_id.emplace(p.query_id, &p);
    if (!p.seeds.empty()) by_seeds.emplace(seed_key(p.seeds), &p);
  }

  EvalReport report;
  for (auto l : cutoffs) report.overall.push_back({l, 0.0, 0.0, 0.0});
  std::vector<std::size_t> gold_counts, pred_counts;
  const PredictedQuery empty;
  for (const auto& g : gold) {
    const PredictedQuery* p = nullptr;
    if (!g.query_id.empty()) {
      auto it = by_id.find(g.query_id);
      if (it != by_id.end()) p = it->second;
    }
    // A seed match never overrides a conflicting query id.
    if (!p && !g.seeds.empty()) {
      auto it = by_seeds.find(seed_key(g.seeds));
      if (it != by_seeds.end() &&
          (g.query_id.empty() || it->second->query_id.empty() || it->second->query_id == g.query_id))
        p = it->second;
    }
    if (!p) p = &empty;

    QueryScores qs;
    qs.query_id = g.query_id;
    qs.gold_facets = g.facets.size();
    qs.predicted_facets = p->facets.size();
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      CutoffScores s{cutoffs[c], mmap(*p, g, cutoffs[c]), pmap(*p, g, cutoffs[c]), 0.0};
      s.bmap = harmonic_mean(s.mmap, s.pmap);
      report.overall[c].mmap += s.mmap;
      report.overall[c].pmap += s.pmap;
      report.overall[c].bmap += s.bmap;
      qs.per_cutoff.push_back(s);
    }
    gold_counts.push_back(qs.gold_facets);
    pred_counts.push_back(qs.predicted_facets);
    report.queries.push_back(std::move(qs));
  }
  if (!gold.empty()) {
    const double n = static_cast<double>(gold.size());
    for (auto& s : report.overall) {
      s.mmap /= n;
      s.pmap /= n;
      s.bmap /= n;
    }
  }
  report.facet_count = facet_count_distance(gold_counts, pred_counts);
  return report;
}

nlohmann::json EvalReport::to_json() const {
  auto scores = [](const std::vector<CutoffScores>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : v) arr.push_back({{"cutoff", s.cutoff}, {"mmap", s.mmap}, {"pmap", s.pmap}, {"bmap", s.bmap}});
    return arr;
  };
  nlohmann::json j;
  j["overall"] = scores(overall);
  j["facet_count_distance"] = {{"l1", facet_count.l1}, {"l2", facet_count.l2}};
  j["queries"] = nlohmann::json::array();
  for (const auto& q : queries)
    j["queries"].push_back({{"query_id", q.query_id},
                            {"gold_facets", q.gold_facets},
                            {"predicted_facets", q.predicted_facets},
                            {"scores", scores(q.per_cutoff)}});
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char buf[64];
  auto header = [&](const char* name) {
    for (const auto& s : overall) {
      std::snprintf(buf, sizeof buf, "%9s", (std::string(name) + "@" + std::to_string(s.cutoff)).c_str());
      out << buf;
    }
  };
  out << std::string(12, ' ');
  header("MMAP");
  out << "  ";
  header("PMAP");
  out << "  ";
  header("BMAP");
  out << '\n';
  auto row = [&](const std::string& label, const std::vector<CutoffScores>& v) {
    std::snprintf(buf, sizeof buf, "%-12.12s", label.c_str());
    out << buf;
    for (const auto& s : v) {
      std::snprintf(buf, sizeof buf, "%9.3f", s.mmap);
      out << buf;
    }
    out << "  ";
    for (const auto& s : v) {
      std::snprintf(buf, sizeof buf, "%9.3f", s.pmap);
      out << buf;
    }
    out << "  ";
    for (const auto& s : v) {
      std::snprintf(buf, sizeof buf, "%9.3f", s.bmap);
      out << buf;
    }
    out << '\n';
  };
  for (const auto& q : queries) row(q.query_id.empty() ? "-" : q.query_id, q.per_cutoff);
  row("overall", overall);
  std::snprintf(buf, sizeof buf, "facet-count distance: l1 = %.3f  l2 = %.3f\n", facet_count.l1, facet_count.l2);
  out << buf;
  return out.str();
}

namespace {

std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }
std::string ptr(const std::string& base, std::size_t idx) { return base + "/" + std::to_string(idx); }

std::vector<std::string> parse_seeds(const nlohmann::json& j, const std::string& at) {
  if (!j.is_array()) throw SchemaError(at, "expected an array of seed strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw SchemaError(ptr(at, i), "seed must be a string");
    out.push_back(normalize_entity(j[i].get<std::string>()));
  }
  return out;
}

std::string parse_query_id(const nlohmann::json& q, const std::string& at) {
  if (!q.contains("query_id")) return {};
  const auto& id = q["query_id"];
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<long long>());
  throw SchemaError(ptr(at, "query_id"), "query_id must be a string or integer");
}

}  // namespace

std::vector<GoldQuery> parse_gold(const nlohmann::json& doc) {
  if (!doc.is_array()) throw SchemaError("", "gold file must be a JSON array");
  std::vector<GoldQuery> out;
  for (std::size_t qi = 0; qi < doc.size(); ++qi) {
    const auto at = ptr("", qi);
    const auto& q = doc[qi];
    if (!q.is_object()) throw SchemaError(at, "query must be an object");
    GoldQuery g;
    g.query_id = parse_query_id(q, at);
    if (!q.contains("seeds")) throw SchemaError(ptr(at, "seeds"), "missing");
    g.seeds = parse_seeds(q["seeds"], ptr(at, "seeds"));
    if (!q.contains("facets") || !q["facets"].is_array() || q["facets"].empty())
      throw SchemaError(ptr(at, "facets"), "expected a non-empty array of facets");
    const auto& facets = q["facets"];
    for (std::size_t fi = 0; fi < facets.size(); ++fi) {
      const auto fat = ptr(ptr(at, "facets"), fi);
      if (!facets[fi].is_array() || facets[fi].empty()) throw SchemaError(fat, "facet must be a non-empty array");
      EntitySet set;
      for (std::size_t ei = 0; ei < facets[fi].size(); ++ei) {
        if (!facets[fi][ei].is_string()) throw SchemaError(ptr(fat, ei), "entity must be a string");
        set.insert(normalize_entity(facets[fi][ei].get<std::string>()));
      }
      g.facets.push_back(std::move(set));
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<PredictedQuery> parse_predictions(const nlohmann::json& doc) {
  std::vector<PredictedQuery> out;
  auto one = [&](const nlohmann::json& q, const std::string& at) {
    if (!q.is_object()) throw SchemaError(at, "prediction must be an object");
    PredictedQuery p;
    p.query_id = parse_query_id(q, at);
    if (q.contains("query")) p.seeds = parse_seeds(q["query"], ptr(at, "query"));
    else if (q.contains("seeds")) p.seeds = parse_seeds(q["seeds"], ptr(at, "seeds"));
    else if (p.query_id.empty()) throw SchemaError(ptr(at, "query"), "missing (and no query_id)");
    if (!q.contains("facets") || !q["facets"].is_array()) throw SchemaError(ptr(at, "facets"), "expected an array");
    const auto& facets = q["facets"];
    for (std::size_t fi = 0; fi < facets.size(); ++fi) {
      const auto fat = ptr(ptr(at, "facets"), fi);
      const auto& f = facets[fi];
      if (!f.is_object() || !f.contains("entities") || !f["entities"].is_array())
        throw SchemaError(fat, "facet must be an object with an 'entities' array");
      const auto eat = ptr(fat, "entities");
      RankedList list;
      EntitySet seen;
      for (std::size_t ei = 0; ei < f["entities"].size(); ++ei) {
        const auto& e = f["entities"][ei];
        std::string name;
        if (e.is_string()) {
          name = e.get<std::string>();
        } else if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_number()) {
          name = e[0].get<std::string>();
        } else {
          throw SchemaError(ptr(eat, ei), "entity must be a string or [string, number]");
        }
        name = normalize_entity(name);
        if (!seen.insert(name).second) throw SchemaError(ptr(eat, ei), "duplicate entity '" + name + "'");
        list.push_back(std::move(name));
      }
      p.facets.push_back(std::move(list));
    }
    out.push_back(std::move(p));
  };
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) one(doc[i], ptr("", i));
  } else {
    one(doc, "");
  }
  return out;
}

}  // namespace facetset
