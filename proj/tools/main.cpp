// facetset: multi-faceted entity set expansion from the command line.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "facetset/corpus.hpp"
#include "facetset/parallel.hpp"
#include "facetset/version.hpp"

namespace cli = facetset::cli;

int main(int argc, char** argv) {
  CLI::App app{"Expand a seed set into one ranked entity list per shared semantic facet."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version",
                       std::string("facetset ") + facetset::kVersion + " (index format " +
                           std::to_string(facetset::kIndexFormatVersion) + ")");

  std::string config_path;
  std::vector<std::string> overrides;
  std::size_t threads = 0;
  cli::Globals g;
  app.add_option("-c,--config", config_path, "key = value configuration file");
  app.add_option("-s,--set", overrides, "override one setting, key=value (repeatable)");
  app.add_option("--threads", threads, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_flag("--json", g.json, "machine-readable output on stdout");
  app.add_flag("-q,--quiet", g.quiet, "suppress progress messages");

  cli::IndexArgs ia;
  auto* index = app.add_subcommand("index", "build a skip-gram index from a corpus (one document per line)");
  index->add_option("corpus", ia.corpus, "corpus text file")->required();
  index->add_option("-o,--out", ia.out, "index file to write")->required();

  cli::ExpandArgs ea;
  std::string scorer, sidecar;
  auto* expand = app.add_subcommand("expand", "expand a seed query into per-facet entity lists");
  expand->add_option("-i,--index", ea.index, "index file")->required();
  expand->add_option("-e,--embeddings", ea.embeddings, "word vectors (text, optionally .gz)")->required();
  expand->add_option("query", ea.query, "comma-separated seeds, e.g. beijing,london")->required();
  expand->add_option("-o,--out", ea.out, "write the JSON result here");
  expand->add_option("--diagnostics", ea.diagnostics, "write the clustering and fusion report here");
  expand->add_option("--scorer", scorer, "corpus or mlm");
  expand->add_option("--sidecar", sidecar, "stdio:<command>, tcp:<host>:<port> or tcp:<port>");

  cli::EvalArgs va;
  std::string cutoffs;
  auto* eval = app.add_subcommand("eval", "score predictions against gold facets");
  eval->add_option("predictions", va.predictions, "expansion output (object or array)")->required();
  eval->add_option("gold", va.gold, "gold facets")->required();
  eval->add_option("--cutoffs", cutoffs, "comma-separated cutoffs, e.g. 5,10,20");
  eval->add_option("-o,--out", va.out, "write the JSON report here");

  cli::SelftestArgs sa;
  auto* selftest = app.add_subcommand("selftest", "check clustering and correlation against brute-force oracles");
  selftest->add_option("--ap-instances", sa.affinity_instances)->check(CLI::PositiveNumber);
  selftest->add_option("--cca-instances", sa.correlation_instances)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kConfig;
  }

  try {
    auto& cfg = g.config;
    cfg.threads = facetset::default_thread_count();
    if (!config_path.empty()) cfg.load_file(config_path);
    if (!scorer.empty()) cfg.set("scorer", scorer);
    if (!sidecar.empty()) cfg.set("sidecar", sidecar);
    if (!cutoffs.empty()) cfg.set("cutoffs", cutoffs);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (threads > 0) cfg.threads = threads;

    if (*index) return cli::cmd_index(g, ia);
    if (*expand) return cli::cmd_expand(g, ea);
    if (*eval) return cli::cmd_eval(g, va);
    if (*selftest) return cli::cmd_selftest(g, sa);
  } catch (...) {
    return cli::report_current_exception();
  }
  return cli::kFailure;
}
