#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facetset/corpus.hpp"
#include "facetset/embeddings.hpp"
#include "facetset/errors.hpp"
#include "facetset/expansion.hpp"
#include "facetset/metrics.hpp"
#include "facetset/oracles/suites.hpp"
#include "facetset/sidecar.hpp"
#include "facetset/version.hpp"

namespace facetset::cli {

namespace {

using nlohmann::json;

void info(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << "facetset: " << msg << '\n';
}

void warn(const std::string& msg) { std::cerr << "facetset: warning: " << msg << '\n'; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open");
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw SchemaError("", path.string() + " is not valid JSON");
  return j;
}

json cluster_report(const QueryResult& r) {
  json out = json::array();
  for (std::size_t s = 0; s < r.clusters.size(); ++s) {
    const auto& [seed, clusters] = r.clusters[s];
    json js = {{"seed", seed},
               {"converged", r.affinity[s].converged},
               {"iterations", r.affinity[s].iterations},
               {"clusters", json::array()}};
    for (const auto& c : clusters) {
      json jc = {{"exemplar", c.members[c.exemplar].skipgram.canonical()},
                 {"total_count", c.total_count()},
                 {"members", json::array()}};
      for (const auto& m : c.members) jc["members"].push_back({m.skipgram.canonical(), m.count});
      js["clusters"].push_back(std::move(jc));
    }
    out.push_back(std::move(js));
  }
  return out;
}

std::string human_expansion(const QueryResult& r) {
  std::ostringstream ss;
  ss << "query:";
  for (std::size_t i = 0; i < r.query.size(); ++i) ss << (i ? ", " : " ") << r.query[i];
  ss << '\n';
  for (const auto& f : r.facets) {
    ss << "facet " << f.facet_id << " (" << f.skipgram_count << " skip-grams, " << f.occurrence_count
       << " occurrences, scorer " << f.scorer << ")\n";
    std::size_t rank = 1;
    for (const auto& [e, w] : f.entities)
      ss << std::setw(4) << rank++ << ". " << std::left << std::setw(24) << e << std::right << std::fixed
         << std::setprecision(6) << w << '\n';
  }
  return ss.str();
}

}  // namespace

std::vector<std::string> split_query(const std::string& query) {
  std::vector<std::string> out;
  std::stringstream ss(query);
  for (std::string part; std::getline(ss, part, ',');) {
    const auto b = part.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = part.find_last_not_of(" \t");
    out.push_back(part.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("query names no seeds");
  return out;
}

int cmd_index(const Globals& g, const IndexArgs& a) {
  const auto index = build_index_file(a.corpus, g.config.index_config());
  save_index(index, a.out);
  info(g, "wrote " + a.out.string());
  if (g.json) {
    json j = {{"index", a.out.string()},
              {"entities", index.entity_count()},
              {"skipgrams", index.skipgram_count()},
              {"occurrences", index.total_count()},
              {"config", g.config.to_json()}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "entities:    " << index.entity_count() << '\n'
              << "skip-grams:  " << index.skipgram_count() << '\n'
              << "occurrences: " << index.total_count() << '\n';
  }
  return kOk;
}

int cmd_expand(const Globals& g, const ExpandArgs& a) {
  const auto& cfg = g.config;
  const auto seeds = split_query(a.query);
  const auto index = load_index(a.index);
  const auto table = load_embeddings(a.embeddings);
  if (table.duplicates() > 0) warn(std::to_string(table.duplicates()) + " duplicate embedding rows ignored");
  info(g, "index: " + std::to_string(index.entity_count()) + " entities; embeddings: " +
              std::to_string(table.size()) + " x " + std::to_string(table.dim()));

  const QueryConfig qc = cfg.query_config();
  std::unique_ptr<SidecarClient> client;
  std::unique_ptr<Scorer> mlm;
  if (cfg.scorer == "mlm") {
    if (cfg.sidecar.empty()) throw ConfigError("scorer = mlm needs a sidecar endpoint");
    try {
      client = std::make_unique<SidecarClient>(SidecarEndpoint::parse(cfg.sidecar),
                                               std::chrono::milliseconds(cfg.sidecar_timeout_ms));
      mlm = std::make_unique<MlmScorer>(*client, &index);
      info(g, "scorer: mlm:" + client->model());
    } catch (const ScorerUnavailable& e) {
      if (!cfg.scorer_fallback) throw;
      warn(std::string(e.what()) + "; falling back to the corpus scorer");
    }
  }

  QueryResult result;
  try {
    result = expand_query(seeds, index, table, qc, mlm.get());
  } catch (const NoCoherentFacet& e) {
    if (a.diagnostics) {
      write_text(*a.diagnostics, e.diagnostics() + "\n");
      std::cerr << "facetset: fusion report written to " << a.diagnostics->string() << '\n';
    } else {
      std::cerr << "facetset: rerun with --diagnostics FILE for the per-pair correlation tables\n";
    }
    throw;
  } catch (const ScorerUnavailable& e) {
    if (!mlm || !cfg.scorer_fallback) throw;
    warn(std::string(e.what()) + "; falling back to the corpus scorer");
    result = expand_query(seeds, index, table, qc, nullptr);
  }
  for (const auto& w : result.warnings) warn(w);

  json doc = expansion_to_json(result);
  doc["config"] = cfg.to_json();
  doc["version"] = kVersion;
  const std::string payload = doc.dump(2) + "\n";

  if (a.diagnostics) {
    json diag = {{"fusion", result.trace.to_json()}, {"seeds", cluster_report(result)}, {"warnings", result.warnings}};
    write_text(*a.diagnostics, diag.dump(2) + "\n");
  }
  if (a.out) {
    write_text(*a.out, payload);
    info(g, "wrote " + a.out->string());
  }
  if (g.json) {
    std::cout << payload;
  } else if (!a.out || !g.quiet) {
    std::cout << human_expansion(result);
  }
  return kOk;
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const auto gold = parse_gold(read_json(a.gold));
  const auto preds = parse_predictions(read_json(a.predictions));
  const auto report = evaluate(gold, preds, g.config.cutoffs);
  json doc = report.to_json();
  doc["config"] = {{"cutoffs", g.config.cutoffs}};
  doc["version"] = kVersion;
  const std::string payload = doc.dump(2) + "\n";
  if (a.out) {
    write_text(*a.out, payload);
    info(g, "wrote " + a.out->string());
  }
  if (g.json)
    std::cout << payload;
  else
    std::cout << report.to_table();
  return kOk;
}

int cmd_selftest(const Globals& g, const SelftestArgs& a) {
  const std::vector<oracles::SuiteReport> reports = {oracles::affinity_suite(a.affinity_instances),
                                                     oracles::correlation_suite(a.correlation_instances)};
  bool ok = true;
  json doc = json::array();
  for (const auto& r : reports) {
    ok = ok && r.passed();
    if (g.json) {
      doc.push_back({{"suite", r.name},
                     {"passed", r.passed()},
                     {"checked", r.checked},
                     {"skipped", r.skipped},
                     {"failures", r.failures},
                     {"worst_deviation", r.worst},
                     {"seconds", r.seconds},
                     {"notes", r.notes}});
      continue;
    }
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.checked << " checked, " << r.skipped
              << " skipped, " << r.failures << " failed, worst deviation " << r.worst << '\n';
    for (const auto& n : r.notes) std::cout << "     " << n << '\n';
  }
  if (g.json) std::cout << doc.dump(2) << '\n';
  return ok ? kOk : kFailure;
}

int report_current_exception() {
  auto fail = [](int code, const std::string& msg) {
    std::cerr << "facetset: error: " << msg << '\n';
    return code;
  };
  try {
    throw;
  } catch (const UnknownEntity& e) {
    return fail(kUnknownEntity, e.what());
  } catch (const NoCoherentFacet& e) {
    return fail(kNoCoherentFacet, e.what());
  } catch (const SchemaError& e) {
    return fail(kSchema, e.what());
  } catch (const ConfigError& e) {
    return fail(kConfig, e.what());
  } catch (const ScorerUnavailable& e) {
    return fail(kScorerUnavailable, std::string("scorer unavailable: ") + e.what());
  } catch (const ProtocolError& e) {
    return fail(kScorerUnavailable, std::string("sidecar protocol error: ") + e.what());
  } catch (const IoError& e) {
    return fail(kIo, e.what());
  } catch (const IncompatibleIndex& e) {
    return fail(kIo, e.what());
  } catch (const ChecksumError& e) {
    return fail(kIo, e.what());
  } catch (const FormatError& e) {
    return fail(kIo, e.what());
  } catch (const DimensionError& e) {
    return fail(kIo, e.what());
  } catch (const EmptyCorpus& e) {
    return fail(kIo, e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, e.what());
  } catch (...) {
    return fail(kFailure, "unknown error");
  }
}

}  // namespace facetset::cli
