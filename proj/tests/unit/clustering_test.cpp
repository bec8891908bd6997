#include <doctest.h>

#include <random>
#include <set>

#include "facetset/clustering.hpp"
#include "facetset/errors.hpp"
#include "facetset/oracles/oracles.hpp"
#include "planted.hpp"

using namespace facetset;

namespace {

std::vector<std::size_t> sorted_set(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Which planted facets' context words appear in the cluster's members.
std::set<std::string> facets_touched(const SkipGramCluster& c, const testing::PlantSpec& spec) {
  std::set<std::string> out;
  for (const auto& m : c.members)
    for (const auto* side : {&m.skipgram.left, &m.skipgram.right})
      for (const auto& tok : *side)
        for (const auto& f : spec.facets)
          if (std::find(f.words.begin(), f.words.end(), tok) != f.words.end()) out.insert(f.name);
  return out;
}

}  // namespace

TEST_CASE("similarity metrics") {
  const std::vector<std::vector<double>> v = {{1, 0}, {2, 0}, {0, 3}};
  const auto cos = build_similarity(v, SimilarityMetric::cosine, -1.0);
  CHECK(cos.s(0, 1) == doctest::Approx(1.0));
  CHECK(cos.s(0, 2) == doctest::Approx(0.0));
  CHECK(cos.s(1, 1) == -1.0);

  const std::vector<std::vector<double>> w = {{0, 0}, {1, 2}};
  const auto euc = build_similarity(w, SimilarityMetric::neg_sq_euclidean, -7.0);
  CHECK(euc.s(0, 1) == doctest::Approx(-5.0));
  CHECK(euc.s(1, 0) == doctest::Approx(-5.0));
  CHECK(euc.s(0, 0) == -7.0);

  CHECK(parse_metric("cosine") == SimilarityMetric::cosine);
  CHECK(to_string(SimilarityMetric::neg_sq_euclidean) == "neg_sq_euclidean");
  CHECK_THROWS_AS(parse_metric("manhattan"), ConfigError);
}

TEST_CASE("zero vector under cosine names the offender") {
  const std::vector<std::vector<double>> v = {{1, 0}, {0, 0}};
  const std::vector<std::string> labels = {"ok __ fine", "empty __ ctx"};
  try {
    build_similarity(v, SimilarityMetric::cosine, 0.0, labels);
    FAIL("expected DegenerateVector");
  } catch (const DegenerateVector& e) {
    CHECK(e.label() == "empty __ ctx");
  }
  CHECK_NOTHROW(build_similarity(v, SimilarityMetric::neg_sq_euclidean, 0.0));
}

TEST_CASE("median of the off-diagonal") {
  SimilarityGraph g;
  g.s.resize(3, 3);
  g.s << 0, -1, -4, -1, 0, -9, -4, -9, 0;
  CHECK(median_off_diagonal(g) == doctest::Approx(-4.0));
  SimilarityGraph one;
  one.s = Eigen::MatrixXd::Constant(1, 1, 5.0);
  CHECK(median_off_diagonal(one) == 0.0);
}

TEST_CASE("single node is its own exemplar") {
  SimilarityGraph g;
  g.s = Eigen::MatrixXd::Constant(1, 1, -3.0);
  const auto r = affinity_propagation(g);
  CHECK(r.converged);
  CHECK(r.exemplars == std::vector<std::size_t>{0});
  CHECK(r.exemplar_of == std::vector<std::size_t>{0});
}

TEST_CASE("two well separated groups match the brute-force optimum") {
  std::vector<std::vector<double>> pts;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> jitter(0.0, 0.5);
  for (int i = 0; i < 4; ++i) pts.push_back({-10 + jitter(rng), jitter(rng)});
  for (int i = 0; i < 4; ++i) pts.push_back({10 + jitter(rng), jitter(rng)});
  auto g = build_similarity(pts, SimilarityMetric::neg_sq_euclidean, 0.0);
  g.preference = median_off_diagonal(g);
  g.s.diagonal().setConstant(g.preference);

  const auto r = affinity_propagation(g);
  REQUIRE(r.converged);
  CHECK(r.exemplars.size() == 2);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.exemplar_of[i] < 4);
  for (std::size_t i = 4; i < 8; ++i) CHECK(r.exemplar_of[i] >= 4);

  const auto best = oracles::brute_force_exemplars(g.s);
  const bool optimal =
      std::find(best.optimal_sets.begin(), best.optimal_sets.end(), r.exemplars) != best.optimal_sets.end();
  CHECK(optimal);
  CHECK(net_similarity(g, r.exemplar_of) == doctest::Approx(best.best));
  CHECK(sorted_set(r.exemplar_of) == r.exemplars);
}

TEST_CASE("identical points form one cluster") {
  const std::vector<std::vector<double>> pts(5, std::vector<double>{1.0, 2.0, 3.0});
  auto g = build_similarity(pts, SimilarityMetric::neg_sq_euclidean, -1.0);
  const auto r = affinity_propagation(g);
  CHECK(r.exemplars.size() == 1);
  for (auto e : r.exemplar_of) CHECK(e == r.exemplars[0]);
}

TEST_CASE("raising the preference never lowers the cluster count") {
  std::vector<std::vector<double>> pts;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 10; ++i) pts.push_back({u(rng), u(rng)});
  const auto base = build_similarity(pts, SimilarityMetric::neg_sq_euclidean, 0.0);
  std::size_t last = 0;
  for (double p : {-1000.0, -300.0, -100.0, -30.0, -10.0, -1.0, 0.0}) {
    auto g = base;
    g.preference = p;
    g.s.diagonal().setConstant(p);
    const auto r = affinity_propagation(g);
    CHECK(r.exemplars.size() >= last);
    last = r.exemplars.size();
  }
  CHECK(last == 10);
}

TEST_CASE("invalid options and inputs") {
  SimilarityGraph g;
  g.s = Eigen::MatrixXd::Zero(2, 2);
  AffinityOptions o;
  o.damping = 0.3;
  CHECK_THROWS_AS(affinity_propagation(g, o), ConfigError);
  o.damping = 1.0;
  CHECK_THROWS_AS(affinity_propagation(g, o), ConfigError);
  g.s(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(affinity_propagation(g), std::invalid_argument);
}

TEST_CASE("an ambiguous seed splits into pure sense clusters") {
  const auto spec = testing::apple_amazon_spec();
  const auto pc = testing::generate(spec);
  const auto idx = build_index(pc.lines, IndexConfig{});
  const auto table = parse_embeddings(pc.embeddings);

  const auto apple = cluster_seed(idx, table, "apple");
  CHECK(apple.affinity.converged);
  REQUIRE(apple.clusters.size() == 2);
  std::set<std::string> senses;
  for (const auto& c : apple.clusters) {
    const auto touched = facets_touched(c, spec);
    CHECK(touched.size() == 1);
    senses.insert(touched.begin(), touched.end());
    CHECK(c.members.size() > 0);
    CHECK(c.exemplar < c.members.size());
    CHECK(c.matrix().cols() == static_cast<Eigen::Index>(c.members.size()));
  }
  CHECK(senses == std::set<std::string>{"fruit", "company"});
  CHECK(apple.clusters[0].total_count() >= apple.clusters[1].total_count());
}

TEST_CASE("poseidon has two senses") {
  const auto spec = testing::poseidon_spec();
  const auto pc = testing::generate(spec);
  const auto idx = build_index(pc.lines, IndexConfig{});
  const auto table = parse_embeddings(pc.embeddings);
  const auto r = cluster_seed(idx, table, "poseidon");
  CHECK(r.clusters.size() == 2);
}

TEST_CASE("cluster_seed failure modes") {
  const std::vector<std::string> docs = {"aaa kiwi bbb", "aaa kiwi bbb", "aaa kiwi bbb"};
  const auto idx = build_index(docs, IndexConfig{});
  const auto table = parse_embeddings("zzz 1 0\n");
  CHECK_THROWS_AS(cluster_seed(idx, table, "mango"), UnknownEntity);
  CHECK_THROWS_AS(cluster_seed(idx, table, "kiwi"), NoEmbeddableContext);

  const auto zero = parse_embeddings("aaa 0 0\nbbb 0 0\n");
  ClusteringConfig cfg;
  cfg.metric = SimilarityMetric::cosine;
  CHECK_THROWS_AS(cluster_seed(idx, zero, "kiwi", cfg), DegenerateVector);
}

TEST_CASE("max_skipgrams caps the pool") {
  const auto pc = testing::generate(testing::fig1_spec());
  const auto idx = build_index(pc.lines, IndexConfig{});
  const auto table = parse_embeddings(pc.embeddings);
  ClusteringConfig cfg;
  cfg.max_skipgrams = 5;
  const auto r = cluster_seed(idx, table, "beijing", cfg);
  std::size_t members = 0;
  for (const auto& c : r.clusters) members += c.members.size();
  CHECK(members == 5);
}
