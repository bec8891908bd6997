#include "facetset/oracles/suites.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "facetset/clustering.hpp"
#include "facetset/fusion.hpp"
#include "facetset/oracles/oracles.hpp"

namespace facetset::oracles {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream ss;
  ss << '{';
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  ss << '}';
  return ss.str();
}

}  // namespace

SuiteReport affinity_suite(int instances, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "affinity-propagation vs brute force";
  rep.instances = instances;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(2, 8), blobs(1, 3);
  std::uniform_real_distribution<double> center(-10.0, 10.0);
  std::normal_distribution<double> jitter(0.0, 1.5);

  for (int inst = 0; inst < instances; ++inst) {
    const int n = size(rng), k = blobs(rng);
    std::vector<std::array<double, 2>> centers(static_cast<std::size_t>(k));
    for (auto& c : centers) c = {center(rng), center(rng)};
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < n; ++i) {
      const auto& c = centers[static_cast<std::size_t>(i % k)];
      pts.push_back({c[0] + jitter(rng), c[1] + jitter(rng)});
    }
    auto graph = build_similarity(pts, SimilarityMetric::neg_sq_euclidean, 0.0);
    graph.preference = median_off_diagonal(graph);
    graph.s.diagonal().setConstant(graph.preference);

    AffinityOptions opt;
    opt.noise_seed = static_cast<std::uint64_t>(inst);
    const auto ap = affinity_propagation(graph, opt);
    if (!ap.converged) {
      ++rep.skipped;
      continue;
    }
    ++rep.checked;
    const auto best = brute_force_exemplars(graph.s);
    const bool ok = std::find(best.optimal_sets.begin(), best.optimal_sets.end(), ap.exemplars) !=
                    best.optimal_sets.end();
    const double gap = best.best - net_similarity_of(graph.s, ap.exemplars);
    rep.worst = std::max(rep.worst, gap);
    if (!ok) {
      ++rep.failures;
      std::ostringstream ss;
      ss << "instance " << inst << " (n=" << n << "): exemplars " << join(ap.exemplars) << " net "
         << net_similarity_of(graph.s, ap.exemplars) << ", optimum " << join(best.optimal_sets.front()) << " net "
         << best.best;
      rep.notes.push_back(ss.str());
    }
  }
  rep.seconds = since(t0);
  return rep;
}

SuiteReport correlation_suite(int instances, std::uint64_t seed, double tolerance) {
  SuiteReport rep;
  rep.name = "ridge CCA vs gradient ascent";
  rep.instances = instances;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(2, 10), cols(1, 6);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double kRidge = 1e-3;

  for (int inst = 0; inst < instances; ++inst) {
    const int d = dim(rng), m = cols(rng), n = cols(rng);
    Eigen::MatrixXd x(d, m), y(d, n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = gauss(rng);
    // Plant some shared direction half of the time.
    if (inst % 2 == 0) y.col(0) = x.col(0) + 0.3 * y.col(0);

    const double lib = cluster_correlation(x, y, kRidge).raw;
    AscentOptions ao;
    ao.seed = seed + static_cast<std::uint64_t>(inst);
    const double ref = cca_by_gradient_ascent(x, y, kRidge, ao);
    const double dev = std::abs(lib - ref);
    ++rep.checked;
    rep.worst = std::max(rep.worst, dev);
    if (dev > tolerance) {
      ++rep.failures;
      std::ostringstream ss;
      ss << "instance " << inst << " (d=" << d << ", m=" << m << ", n=" << n << "): library " << lib
         << " vs ascent " << ref;
      rep.notes.push_back(ss.str());
    }
  }
  rep.seconds = since(t0);
  return rep;
}

}  // namespace facetset::oracles
