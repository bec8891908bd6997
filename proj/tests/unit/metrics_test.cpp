#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "facetset/errors.hpp"
#include "facetset/metrics.hpp"

using namespace facetset;
using nlohmann::json;

namespace {

GoldQuery gold_of(std::vector<std::vector<std::string>> facets, std::string id = "q") {
  GoldQuery g;
  g.query_id = std::move(id);
  for (auto& f : facets) g.facets.emplace_back(f.begin(), f.end());
  return g;
}

PredictedQuery pred_of(std::vector<RankedList> facets, std::string id = "q") {
  PredictedQuery p;
  p.query_id = std::move(id);
  p.facets = std::move(facets);
  return p;
}

}  // namespace

TEST_CASE("average precision at a cutoff") {
  const RankedList r = {"a", "x", "b"};
  const EntitySet g = {"a", "b"};
  CHECK(ap_at_l(r, g, 3) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(ap_at_l(r, g, 3) == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(ap_at_l(r, g, 1) == 1.0);
  CHECK(ap_at_l(RankedList{}, g, 5) == 0.0);
  // The normalizer is min(l, |gold|), not the number of hits.
  CHECK(ap_at_l(RankedList{"a"}, g, 5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(ap_at_l(r, EntitySet{}, 3), std::invalid_argument);
  CHECK_THROWS_AS(ap_at_l(r, g, 0), std::invalid_argument);
}

TEST_CASE("MMAP lets one prediction serve several gold facets") {
  const auto g = gold_of({{"a", "b"}, {"a", "c"}});
  const auto p = pred_of({{"a", "b", "c"}, {"z"}, {"y"}});
  // Gold 1: AP = 1. Gold 2: hits at 1 and 3 -> (1 + 2/3) / 2.
  CHECK(mmap(p, g, 3) == doctest::Approx((1.0 + (1.0 + 2.0 / 3.0) / 2.0) / 2.0));
}

TEST_CASE("PMAP averages the best match of each prediction") {
  const auto g = gold_of({{"a", "b", "c", "d", "e"}, {"v", "w"}});
  const RankedList good = {"a", "b", "c", "d", "q"};  // 0.8 against the first gold facet
  CHECK(pmap(pred_of({good, {"q", "r", "s", "t", "u"}}), g, 5) == doctest::Approx(0.4));
  // "v" at rank 5 of a two-entity gold facet: (1/5) / 2.
  CHECK(pmap(pred_of({good, {"q", "r", "s", "t", "v"}}), g, 5) == doctest::Approx(0.45));
  CHECK(pmap(pred_of({good, {"v", "q"}}), g, 5) == doctest::Approx(0.65));
  CHECK(pmap(pred_of({good, {"q", "r", "s", "t", "v"}, {"n"}}), g, 5) == doctest::Approx(0.3));
}

TEST_CASE("PMAP of two predictions with best matches 0.8 and 0.2 is 0.5") {
  const auto g = gold_of({{"a", "b", "c", "d", "e"}});
  // 0.8: four hits in the first four ranks. 0.2: one hit at rank 1 over |gold| = 5.
  const auto p = pred_of({{"a", "b", "c", "d", "x"}, {"e", "x", "y"}});
  CHECK(ap_at_l(p.facets[0], g.facets[0], 5) == doctest::Approx(0.8));
  CHECK(ap_at_l(p.facets[1], g.facets[0], 5) == doctest::Approx(0.2));
  CHECK(pmap(p, g, 5) == doctest::Approx(0.5));
}

TEST_CASE("many noisy facets pull PMAP down but leave MMAP alone") {
  const auto g = gold_of({{"a", "b"}, {"c", "d"}, {"e", "f"}});
  std::vector<RankedList> facets = {{"a", "b"}, {"c", "d"}, {"e", "f"}};
  for (int i = 0; i < 27; ++i) facets.push_back({"noise" + std::to_string(i)});
  const auto p = pred_of(facets);
  CHECK(mmap(p, g, 5) == 1.0);
  CHECK(pmap(p, g, 5) == doctest::Approx(0.1));
  CHECK(bmap(p, g, 5) == doctest::Approx(2 * 0.1 / 1.1));
}

TEST_CASE("harmonic mean identities") {
  CHECK(harmonic_mean(0.37, 0.37) == doctest::Approx(0.37));
  CHECK(harmonic_mean(0.5, 0.5) == 0.5);
  CHECK(harmonic_mean(1.0, 0.0) == 0.0);
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  CHECK(harmonic_mean(0.477, 0.643) == doctest::Approx(0.5477).epsilon(1e-4));
}

TEST_CASE("BMAP lies between MMAP and PMAP") {
  const auto g = gold_of({{"a", "b"}, {"c", "d"}});
  const auto p = pred_of({{"a", "b"}, {"x"}, {"y"}});
  const double m = mmap(p, g, 5), pm = pmap(p, g, 5), b = bmap(p, g, 5);
  CHECK(b >= std::min(m, pm) - 1e-12);
  CHECK(b <= std::max(m, pm) + 1e-12);
}

TEST_CASE("facet count distances") {
  const std::vector<std::size_t> same = {2, 3};
  CHECK(facet_count_distance(same, same).l1 == 0.0);
  const std::vector<std::size_t> gt = {2, 2, 4}, gen = {5, 1, 4};
  const auto d = facet_count_distance(gt, gen);
  CHECK(d.l1 == 4.0);
  CHECK(d.l2 == doctest::Approx(std::sqrt(10.0)));
  const std::vector<std::size_t> a = {1}, b = {2};
  CHECK(facet_count_distance(a, b).l1 == 1.0);
  CHECK(facet_count_distance(a, b).l2 == 1.0);
  CHECK_THROWS_AS(facet_count_distance(a, gt), std::invalid_argument);
}

TEST_CASE("duplicating a predicted facet") {
  const auto g = gold_of({{"a", "b"}, {"c", "d"}});
  const auto p = pred_of({{"a", "b"}, {"c", "x"}, {"zz"}});
  const double m0 = mmap(p, g, 5), p0 = pmap(p, g, 5);
  for (std::size_t f = 0; f < p.facets.size(); ++f) {
    auto dup = p;
    dup.facets.push_back(p.facets[f]);
    CHECK(mmap(dup, g, 5) == doctest::Approx(m0));
    // The new mean moves toward the duplicated facet's own best match.
    double best = 0.0;
    for (const auto& gf : g.facets) best = std::max(best, ap_at_l(p.facets[f], gf, 5));
    CHECK(pmap(dup, g, 5) == doctest::Approx((3 * p0 + best) / 4));
    if (best <= p0) CHECK(pmap(dup, g, 5) <= p0 + 1e-12);
  }
}

TEST_CASE("facet order does not matter") {
  const auto g = gold_of({{"a", "b"}, {"c", "d"}, {"e"}});
  auto p = pred_of({{"c", "a"}, {"e", "d"}, {"x", "b"}});
  const double m = mmap(p, g, 5), pm = pmap(p, g, 5);
  std::sort(p.facets.begin(), p.facets.end());
  do {
    CHECK(mmap(p, g, 5) == doctest::Approx(m));
    CHECK(pmap(p, g, 5) == doctest::Approx(pm));
  } while (std::next_permutation(p.facets.begin(), p.facets.end()));
  auto g2 = g;
  std::reverse(g2.facets.begin(), g2.facets.end());
  CHECK(mmap(p, g2, 5) == doctest::Approx(m));
  CHECK(pmap(p, g2, 5) == doctest::Approx(pm));
}

TEST_CASE("empty prediction scores zero everywhere") {
  const auto g = gold_of({{"a"}});
  const auto p = pred_of({});
  CHECK(mmap(p, g, 5) == 0.0);
  CHECK(pmap(p, g, 5) == 0.0);
  CHECK(bmap(p, g, 5) == 0.0);
}

TEST_CASE("evaluate matches by id, then by seeds, and scores missing queries as zero") {
  auto g1 = gold_of({{"a", "b"}}, "q1");
  auto g2 = gold_of({{"c"}}, "");
  g2.seeds = {"x", "y"};
  auto g3 = gold_of({{"d"}}, "q3");
  auto p1 = pred_of({{"a", "b"}}, "q1");
  auto p2 = pred_of({{"c"}}, "");
  p2.seeds = {"x", "y"};
  const std::vector<GoldQuery> gold = {g1, g2, g3};
  const std::vector<PredictedQuery> preds = {p2, p1};
  const std::vector<std::size_t> cutoffs = {5, 10};
  const auto r = evaluate(gold, preds, cutoffs);
  REQUIRE(r.overall.size() == 2);
  CHECK(r.overall[0].mmap == doctest::Approx(2.0 / 3.0));
  CHECK(r.queries[2].per_cutoff[0].bmap == 0.0);
  CHECK(r.facet_count.l1 == 1.0);
  const auto j = r.to_json();
  CHECK(j["overall"][1]["cutoff"] == 10);
  CHECK(r.to_table().find("MMAP@5") != std::string::npos);

  // Seeds never pair queries whose ids disagree.
  auto g4 = gold_of({{"a"}}, "q4");
  g4.seeds = {"x", "y"};
  auto p4 = pred_of({{"a"}}, "other");
  p4.seeds = {"x", "y"};
  const std::vector<GoldQuery> g4v = {g4};
  const std::vector<PredictedQuery> p4v = {p4};
  CHECK(evaluate(g4v, p4v, cutoffs).overall[0].mmap == 0.0);
}

TEST_CASE("entity normalization") {
  CHECK(normalize_entity("New  York") == "new_york");
  CHECK(normalize_entity(" Paris ") == "paris");
}

TEST_CASE("parsing gold and predictions") {
  const auto gold = parse_gold(json::parse(R"([{"query_id": 1, "seeds": ["Beijing", "London"],
      "facets": [["Paris", "New York"], ["Sydney"]]}])"));
  REQUIRE(gold.size() == 1);
  CHECK(gold[0].query_id == "1");
  CHECK(gold[0].seeds == std::vector<std::string>{"beijing", "london"});
  CHECK(gold[0].facets[0].count("new_york"));

  const auto preds = parse_predictions(json::parse(R"({"query": ["beijing", "london"],
      "facets": [{"id": 0, "entities": [["paris", 0.9], "sydney"]}]})"));
  REQUIRE(preds.size() == 1);
  CHECK(preds[0].facets[0] == RankedList{"paris", "sydney"});
}

TEST_CASE("schema errors carry a JSON pointer") {
  auto pointer_of = [](auto&& fn) -> std::string {
    try {
      fn();
    } catch (const SchemaError& e) {
      return e.pointer();
    }
    return "<none>";
  };
  CHECK(pointer_of([] { parse_gold(json::parse(R"({"a": 1})")); }) == "");
  CHECK(pointer_of([] { parse_gold(json::parse(R"([{"seeds": ["a"], "facets": [["x", 3]]}])")); }) ==
        "/0/facets/0/1");
  CHECK(pointer_of([] { parse_gold(json::parse(R"([{"seeds": ["a"], "facets": []}])")); }) == "/0/facets");
  CHECK(pointer_of([] { parse_gold(json::parse(R"([{"facets": [["x"]]}])")); }) == "/0/seeds");
  CHECK(pointer_of([] {
          parse_predictions(json::parse(R"([{"query": ["a"], "facets": [{"entities": ["x", "X"]}]}])"));
        }) == "/0/facets/0/entities/1");
  CHECK(pointer_of([] { parse_predictions(json::parse(R"({"query": ["a"], "facets": [{"entities": [[1, 2]]}]})")); }) ==
        "/facets/0/entities/0");
  CHECK(pointer_of([] { parse_predictions(json::parse(R"({"facets": []})")); }) == "/query");
}
