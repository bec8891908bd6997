#include "facetset/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "facetset/errors.hpp"
#include "facetset/parallel.hpp"

namespace facetset {

namespace {

struct Whitened {
  Eigen::MatrixXd basis;   // d x r, orthonormal left singular vectors
  Eigen::VectorXd shrink;  // r, s / sqrt(s^2 + eps)
  Eigen::MatrixXd coef;    // m x r, maps a unit vector in the whitened space to coefficients
};

// With X = U S V', (X'X + eps I)^{-1/2} X' = V diag(s / sqrt(s^2 + eps)) U'.
// The whitened cross-covariance K_x X'Y K_y therefore has the same nonzero
// singular values as diag(shrink_x) U_x' U_y diag(shrink_y), which is at
// most rank(X) x rank(Y) instead of m x n.
Whitened whiten(const Eigen::MatrixXd& x, double ridge) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index r = 0;
  const double tol = std::numeric_limits<double>::epsilon() * std::max(x.rows(), x.cols()) *
                     (s.size() ? s(0) : 0.0);
  while (r < s.size() && s(r) > tol) ++r;
  Whitened w;
  w.basis = svd.matrixU().leftCols(r);
  w.shrink.resize(r);
  w.coef.resize(x.cols(), r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double denom = std::sqrt(s(k) * s(k) + ridge);
    w.shrink(k) = s(k) / denom;
    w.coef.col(k) = svd.matrixV().col(k) / denom;
  }
  return w;
}

Eigen::MatrixXd center_columns(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j).array() -= out.col(j).mean();
  return out;
}

}  // namespace

CcaResult cluster_correlation(const Eigen::MatrixXd& x_in, const Eigen::MatrixXd& y_in, double ridge, bool centered) {
  if (x_in.rows() != y_in.rows())
    throw DimensionError("cluster_correlation: dimension " + std::to_string(x_in.rows()) + " vs " +
                         std::to_string(y_in.rows()));
  if (x_in.cols() == 0 || y_in.cols() == 0) throw std::invalid_argument("cluster_correlation: empty cluster");
  if (!(ridge > 0.0)) throw std::invalid_argument("cluster_correlation: ridge must be positive");

  const Eigen::MatrixXd x = centered ? center_columns(x_in) : x_in;
  const Eigen::MatrixXd y = centered ? center_columns(y_in) : y_in;

  CcaResult out;
  out.a = Eigen::VectorXd::Zero(x.cols());
  out.b = Eigen::VectorXd::Zero(y.cols());
  const Whitened wx = whiten(x, ridge);
  const Whitened wy = whiten(y, ridge);
  if (wx.shrink.size() == 0 || wy.shrink.size() == 0) {
    out.u = x * out.a;
    out.v = y * out.b;
    return out;
  }
  const Eigen::MatrixXd core = wx.shrink.asDiagonal() * (wx.basis.transpose() * wy.basis) * wy.shrink.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.raw = svd.singularValues()(0);
  out.corr = std::clamp(out.raw, 0.0, 1.0);
  out.a = wx.coef * svd.matrixU().col(0);
  out.b = wy.coef * svd.matrixV().col(0);
  out.u = x * out.a;
  out.v = y * out.b;
  return out;
}

double relative_ridge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double scale) {
  const double cols = static_cast<double>(x.cols() + y.cols());
  const double mean_sq = cols > 0 ? (x.squaredNorm() + y.squaredNorm()) / cols : 0.0;
  return std::max(scale * mean_sq, std::numeric_limits<double>::min());
}

double pair_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const CorrelationOptions& options) {
  return cluster_correlation(x, y, relative_ridge(x, y, options.ridge_scale), options.centered).corr;
}

std::vector<double> softmax(std::span<const double> x, double base) {
  if (x.empty()) return {};
  const double lb = std::log(base);
  const double top = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += out[i] = std::exp((x[i] - top) * lb);
  for (auto& v : out) v /= sum;
  return out;
}

RelevanceDecision decide_relevance(std::span<const double> correlations, const RelevanceOptions& options) {
  if (correlations.empty()) throw std::invalid_argument("decide_relevance: no facets to compare against");
  if (!(options.softmax_base > 1.0)) throw ConfigError("softmax_base must exceed 1");
  RelevanceDecision d;
  d.correlations.assign(correlations.begin(), correlations.end());
  const std::size_t t = correlations.size();
  const auto best = static_cast<std::size_t>(
      std::max_element(correlations.begin(), correlations.end()) - correlations.begin());

  // log p_i = z_i - log(sum), z_i = (c_i - max) ln(base). Equal inputs give
  // z_i = 0 and sum = t exactly, so the score is exactly 0.
  const double lb = std::log(options.softmax_base);
  const double top = correlations[best];
  std::vector<double> z(t);
  double sum = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    z[i] = (correlations[i] - top) * lb;
    sum += std::exp(z[i]);
  }
  const double log_sum = std::log(sum);
  const double log_t = std::log(static_cast<double>(t));
  d.softmaxed.resize(t);
  double kl = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    const double log_p = z[i] - log_sum;
    d.softmaxed[i] = std::exp(log_p);
    kl += d.softmaxed[i] * (log_p + log_t);
  }
  d.rele = std::max(0.0, kl);

  if (t == 1) {
    d.single_facet_fallback = true;
    if (correlations[0] >= options.raw_threshold) d.matched = 0;
  } else if (d.rele > options.threshold) {
    d.matched = best;
  }
  return d;
}

RelevanceDecision relevance(const Eigen::MatrixXd& facet, std::span<const Eigen::MatrixXd> others,
                            const RelevanceOptions& options, const CorrelationOptions& correlation) {
  std::vector<double> corr;
  corr.reserve(others.size());
  for (const auto& y : others) corr.push_back(pair_correlation(facet, y, correlation));
  return decide_relevance(corr, options);
}

Eigen::MatrixXd CoherentFacet::matrix() const {
  const auto d = members.empty() ? 0 : static_cast<Eigen::Index>(members.front().member.embedding.vector.size());
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j)
    x.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(members[j].member.embedding.vector.data(), d);
  return x;
}

std::uint64_t CoherentFacet::total_count() const {
  std::uint64_t total = 0;
  for (const auto& m : members) total += m.member.count;
  return total;
}

std::vector<std::string> CoherentFacet::distinct_skipgrams() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& m : members) {
    auto key = m.member.skipgram.canonical();
    if (seen.insert(key).second) out.push_back(std::move(key));
  }
  return out;
}

CoherentFacet lift(const SkipGramCluster& cluster) {
  CoherentFacet f;
  f.seeds_covered = {cluster.seed};
  for (const auto& m : cluster.members) f.members.push_back({cluster.seed, m});
  return f;
}

std::vector<CoherentFacet> fuse_pair(const std::vector<CoherentFacet>& reference,
                                     const std::vector<SkipGramCluster>& current, const FusionConfig& config,
                                     FusionStep* step) {
  if (reference.empty() || current.empty()) throw std::invalid_argument("fuse_pair: empty input");
  const std::size_t r = reference.size(), t = current.size();

  std::vector<Eigen::MatrixXd> ref_x(r), cur_x(t);
  for (std::size_t i = 0; i < r; ++i) ref_x[i] = reference[i].matrix();
  for (std::size_t j = 0; j < t; ++j) cur_x[j] = current[j].matrix();

  std::vector<double> flat(r * t);
  parallel_for(r * t, config.threads, [&](std::size_t k) {
    flat[k] = pair_correlation(ref_x[k / t], cur_x[k % t], config.correlation);
  });

  std::vector<CoherentFacet> out;
  if (step) {
    step->seed = current.front().seed;
    step->correlations.assign(r, {});
    step->decisions.clear();
  }
  for (std::size_t i = 0; i < r; ++i) {
    const std::span<const double> row(flat.data() + i * t, t);
    auto decision = decide_relevance(row, config.relevance);
    if (decision.matched) {
      const auto& match = current[*decision.matched];
      CoherentFacet fused = reference[i];
      for (const auto& m : match.members) fused.members.push_back({match.seed, m});
      if (std::find(fused.seeds_covered.begin(), fused.seeds_covered.end(), match.seed) == fused.seeds_covered.end())
        fused.seeds_covered.push_back(match.seed);
      out.push_back(std::move(fused));
    }
    if (step) {
      step->correlations[i].assign(row.begin(), row.end());
      step->decisions.push_back(std::move(decision));
    }
  }
  if (step) step->surviving = out.size();
  return out;
}

std::vector<CoherentFacet> fuse_all(const std::vector<SeedClusters>& per_seed, const FusionConfig& config,
                                    FusionTrace* trace) {
  if (per_seed.empty()) throw std::invalid_argument("fuse_all: no seeds");
  FusionTrace local;
  FusionTrace& tr = trace ? *trace : local;
  tr.seed_order.clear();
  tr.steps.clear();
  for (const auto& [seed, _] : per_seed) tr.seed_order.push_back(seed);

  std::vector<CoherentFacet> facets;
  for (const auto& c : per_seed.front().second) facets.push_back(lift(c));
  for (std::size_t s = 1; s < per_seed.size(); ++s) {
    FusionStep step;
    facets = fuse_pair(facets, per_seed[s].second, config, &step);
    step.seed = per_seed[s].first;
    tr.steps.push_back(std::move(step));
    if (facets.empty())
      throw NoCoherentFacet("no facet shared by seeds up to '" + per_seed[s].first + "'", tr.to_json().dump(2));
  }
  return facets;
}

nlohmann::json FusionTrace::to_json() const {
  nlohmann::json j;
  j["seed_order"] = seed_order;
  j["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json js;
    js["seed"] = s.seed;
    js["correlations"] = s.correlations;
    js["surviving"] = s.surviving;
    js["decisions"] = nlohmann::json::array();
    for (std::size_t i = 0; i < s.decisions.size(); ++i) {
      const auto& d = s.decisions[i];
      nlohmann::json jd;
      jd["reference_facet"] = i;
      jd["softmaxed"] = d.softmaxed;
      jd["rele"] = d.rele;
      jd["single_facet_fallback"] = d.single_facet_fallback;
      jd["matched"] = d.matched ? nlohmann::json(*d.matched) : nlohmann::json(nullptr);
      js["decisions"].push_back(std::move(jd));
    }
    j["steps"].push_back(std::move(js));
  }
  return j;
}

}  // namespace facetset
