#include "facetset/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "facetset/errors.hpp"

namespace facetset {

std::string to_string(SimilarityMetric metric) {
  return metric == SimilarityMetric::cosine ? "cosine" : "neg_sq_euclidean";
}

SimilarityMetric parse_metric(std::string_view name) {
  if (name == "cosine") return SimilarityMetric::cosine;
  if (name == "neg_sq_euclidean") return SimilarityMetric::neg_sq_euclidean;
  throw ConfigError("unknown similarity metric '" + std::string(name) + "'");
}

SimilarityGraph build_similarity(std::span<const std::vector<double>> vectors, SimilarityMetric metric,
                                 double preference, std::span<const std::string> labels) {
  const auto n = static_cast<Eigen::Index>(vectors.size());
  if (n == 0) throw std::invalid_argument("build_similarity: no vectors");
  const auto d = static_cast<Eigen::Index>(vectors[0].size());
  Eigen::MatrixXd x(d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& v = vectors[static_cast<std::size_t>(j)];
    if (static_cast<Eigen::Index>(v.size()) != d) throw DimensionError("build_similarity: mixed dimensions");
    x.col(j) = Eigen::Map<const Eigen::VectorXd>(v.data(), d);
  }

  SimilarityGraph g;
  g.preference = preference;
  g.s.resize(n, n);
  if (metric == SimilarityMetric::cosine) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double norm = x.col(j).norm();
      if (norm == 0.0) {
        const auto idx = static_cast<std::size_t>(j);
        throw DegenerateVector(idx < labels.size() ? labels[idx] : "#" + std::to_string(idx));
      }
      x.col(j) /= norm;
    }
    g.s.noalias() = x.transpose() * x;
    g.s = g.s.cwiseMax(-1.0).cwiseMin(1.0);
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = i; k < n; ++k) g.s(i, k) = g.s(k, i) = -(x.col(i) - x.col(k)).squaredNorm();
  }
  g.s.diagonal().setConstant(preference);
  return g;
}

double median_off_diagonal(const SimilarityGraph& graph) {
  const auto n = graph.s.rows();
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (i != k) vals.push_back(graph.s(i, k));
  if (vals.empty()) return 0.0;
  std::sort(vals.begin(), vals.end());
  const auto m = vals.size();
  return m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
}

double net_similarity(const SimilarityGraph& graph, std::span<const std::size_t> exemplar_of) {
  double total = 0.0;
  for (std::size_t i = 0; i < exemplar_of.size(); ++i)
    total += graph.s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(exemplar_of[i]));
  return total;
}

AffinityResult affinity_propagation(const SimilarityGraph& graph, const AffinityOptions& options) {
  if (options.damping < 0.5 || options.damping >= 1.0)
    throw ConfigError("damping must lie in [0.5, 1)");
  if (options.max_iter < 1 || options.stable_iters < 1)
    throw ConfigError("max_iter and stable_iters must be positive");

  const auto n = graph.s.rows();
  if (graph.s.cols() != n) throw DimensionError("similarity matrix must be square");
  if (!graph.s.allFinite()) throw std::invalid_argument("similarity matrix has non-finite entries");
  AffinityResult result;
  if (n == 0) return result;
  if (n == 1) {
    result.exemplar_of = {0};
    result.exemplars = {0};
    result.converged = true;
    return result;
  }

  // Perturb a working copy to break exact ties. Entries that are exactly 0
  // use the largest magnitude in the matrix as their scale.
  Eigen::MatrixXd s = graph.s;
  const double scale = std::max(s.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  std::mt19937_64 rng(options.noise_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i; k < n; ++k) {
      const double mag = s(i, k) != 0.0 ? std::abs(s(i, k)) : scale;
      const double noise = 1e-12 * mag * unit(rng);
      s(i, k) += noise;
      if (k != i) s(k, i) += noise;
    }
  }

  const double lambda = options.damping;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::size_t> exemplars, previous;
  int unchanged = 0;

  for (int it = 1; it <= options.max_iter; ++it) {
    result.iterations = it;
    // Responsibilities: r(i,k) = s(i,k) - max_{k' != k} [a(i,k') + s(i,k')].
    for (Eigen::Index i = 0; i < n; ++i) {
      double max1 = -std::numeric_limits<double>::infinity();
      double max2 = max1;
      Eigen::Index arg1 = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double v = a(i, k) + s(i, k);
        if (v > max1) {
          max2 = max1;
          max1 = v;
          arg1 = k;
        } else if (v > max2) {
          max2 = v;
        }
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double fresh = s(i, k) - (k == arg1 ? max2 : max1);
        r(i, k) = lambda * r(i, k) + (1.0 - lambda) * fresh;
      }
    }
    // Availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)));
    // a(k,k) = sum_{i' != k} max(0, r(i',k)).
    for (Eigen::Index k = 0; k < n; ++k) {
      double pos_sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != k) pos_sum += std::max(0.0, r(i, k));
      for (Eigen::Index i = 0; i < n; ++i) {
        double fresh;
        if (i == k) {
          fresh = pos_sum;
        } else {
          fresh = std::min(0.0, r(k, k) + pos_sum - std::max(0.0, r(i, k)));
        }
        a(i, k) = lambda * a(i, k) + (1.0 - lambda) * fresh;
      }
    }

    if (!r.allFinite() || !a.allFinite())
      throw std::runtime_error("affinity propagation messages diverged at iteration " + std::to_string(it));

    exemplars.clear();
    for (Eigen::Index k = 0; k < n; ++k)
      if (r(k, k) + a(k, k) > 0.0) exemplars.push_back(static_cast<std::size_t>(k));
    if (!exemplars.empty() && exemplars == previous) {
      if (++unchanged >= options.stable_iters) {
        result.converged = true;
        break;
      }
    } else {
      unchanged = 0;
    }
    previous = exemplars;
  }

  if (exemplars.empty()) {
    Eigen::Index best = 0;
    (r.diagonal() + a.diagonal()).maxCoeff(&best);
    exemplars.push_back(static_cast<std::size_t>(best));
  }

  const auto assign = [&](const std::vector<std::size_t>& ex) {
    std::vector<std::size_t> of(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (std::binary_search(ex.begin(), ex.end(), iu)) {
        of[iu] = iu;
        continue;
      }
      std::size_t best = ex.front();
      for (auto k : ex)
        if (graph.s(i, static_cast<Eigen::Index>(k)) > graph.s(i, static_cast<Eigen::Index>(best))) best = k;
      of[iu] = best;
    }
    return of;
  };

  // Refinement as in the reference implementation: within each cluster, the
  // member with the largest summed similarity from the others becomes the
  // exemplar, then every point is reassigned.
  const auto first = assign(exemplars);
  std::vector<std::size_t> refined;
  for (auto k : exemplars) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i)
      if (first[static_cast<std::size_t>(i)] == k) members.push_back(i);
    Eigen::Index pick = static_cast<Eigen::Index>(k);
    double best = -std::numeric_limits<double>::infinity();
    for (auto j : members) {
      double sum = 0.0;
      for (auto i : members) sum += graph.s(i, j);
      if (sum > best) {
        best = sum;
        pick = j;
      }
    }
    refined.push_back(static_cast<std::size_t>(pick));
  }
  std::sort(refined.begin(), refined.end());
  result.exemplars = refined;
  result.exemplar_of = assign(refined);
  return result;
}

std::uint64_t SkipGramCluster::total_count() const {
  std::uint64_t total = 0;
  for (const auto& m : members) total += m.count;
  return total;
}

Eigen::MatrixXd SkipGramCluster::matrix() const {
  const auto d = members.empty() ? 0 : static_cast<Eigen::Index>(members.front().embedding.vector.size());
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j)
    x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(members[j].embedding.vector.data(), d);
  return x;
}

SeedClustering cluster_seed(const CorpusIndex& index, const EmbeddingTable& table, std::string_view seed,
                            const ClusteringConfig& config) {
  const auto contexts = get_skipgrams(index, seed);
  std::vector<ClusterMember> pool;
  for (const auto& c : contexts) {
    if (pool.size() >= config.max_skipgrams) break;
    if (c.stop_only && !config.include_stop_only) continue;
    auto emb = embed_skipgram(table, *c.skipgram);
    if (!emb) continue;
    pool.push_back({c.id, *c.skipgram, c.count, std::move(*emb)});
  }
  if (pool.empty()) throw NoEmbeddableContext(std::string(seed));

  std::vector<std::vector<double>> vectors;
  std::vector<std::string> labels;
  for (const auto& m : pool) {
    vectors.push_back(m.embedding.vector);
    labels.push_back(index.canonical(m.id));
  }
  SimilarityGraph graph = build_similarity(vectors, config.metric, 0.0, labels);
  graph.preference = config.preference ? *config.preference : median_off_diagonal(graph);
  graph.s.diagonal().setConstant(graph.preference);

  SeedClustering out;
  out.affinity = affinity_propagation(graph, config.affinity);

  std::map<std::size_t, std::size_t> cluster_of_exemplar;
  for (auto e : out.affinity.exemplars) {
    cluster_of_exemplar.emplace(e, out.clusters.size());
    out.clusters.push_back({std::string(seed), {}, 0});
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto& cluster = out.clusters[cluster_of_exemplar.at(out.affinity.exemplar_of[i])];
    if (out.affinity.exemplar_of[i] == i) cluster.exemplar = cluster.members.size();
    cluster.members.push_back(pool[i]);
  }
  std::stable_sort(out.clusters.begin(), out.clusters.end(), [&](const SkipGramCluster& x, const SkipGramCluster& y) {
    if (x.total_count() != y.total_count()) return x.total_count() > y.total_count();
    return index.canonical(x.members[x.exemplar].id) < index.canonical(y.members[y.exemplar].id);
  });
  return out;
}

}  // namespace facetset
