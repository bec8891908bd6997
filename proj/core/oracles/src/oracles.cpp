#include "facetset/oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace facetset::oracles {

double net_similarity_of(const Eigen::MatrixXd& s, const std::vector<std::size_t>& exemplars) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (std::find(exemplars.begin(), exemplars.end(), iu) != exemplars.end()) {
      total += s(i, i);
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (auto k : exemplars) best = std::max(best, s(i, static_cast<Eigen::Index>(k)));
    total += best;
  }
  return total;
}

ExemplarOptimum brute_force_exemplars(const Eigen::MatrixXd& s, double tol) {
  const auto n = static_cast<std::size_t>(s.rows());
  if (n == 0 || n > 16) throw std::invalid_argument("brute_force_exemplars: need 1 <= n <= 16");
  std::vector<std::pair<double, std::vector<std::size_t>>> all;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::size_t> ex;
    for (std::size_t k = 0; k < n; ++k)
      if (mask & (1u << k)) ex.push_back(k);
    all.emplace_back(net_similarity_of(s, ex), std::move(ex));
  }
  ExemplarOptimum out;
  out.best = -std::numeric_limits<double>::infinity();
  for (const auto& [v, _] : all) out.best = std::max(out.best, v);
  const double slack = tol * std::max(1.0, std::abs(out.best));
  for (auto& [v, ex] : all)
    if (v >= out.best - slack) out.optimal_sets.push_back(std::move(ex));
  return out;
}

double cca_by_gradient_ascent(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge,
                              const AscentOptions& options) {
  const Eigen::MatrixXd caa = x.transpose() * x + ridge * Eigen::MatrixXd::Identity(x.cols(), x.cols());
  const Eigen::MatrixXd cbb = y.transpose() * y + ridge * Eigen::MatrixXd::Identity(y.cols(), y.cols());
  const Eigen::MatrixXd cab = x.transpose() * y;

  auto normalize = [](Eigen::VectorXd& v, const Eigen::MatrixXd& c) {
    const double q = v.dot(c * v);
    if (q > 0.0) v /= std::sqrt(q);
  };
  auto objective = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double qa = a.dot(caa * a), qb = b.dot(cbb * b);
    if (qa <= 0.0 || qb <= 0.0) return 0.0;
    return a.dot(cab * b) / std::sqrt(qa * qb);
  };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = caa.norm() + cbb.norm() + cab.norm();
  double best = -std::numeric_limits<double>::infinity();

  for (int r = 0; r < options.restarts; ++r) {
    Eigen::VectorXd a(x.cols()), b(y.cols());
    for (auto& v : a) v = gauss(rng);
    for (auto& v : b) v = gauss(rng);
    normalize(a, caa);
    normalize(b, cbb);
    double f = objective(a, b);
    double step = 1.0 / std::max(scale, 1e-300);
    for (int it = 0; it < options.max_iter && step > 1e-300; ++it) {
      // On the constraint set, grad_a f = C b - f A a and grad_b f = C'a - f B b.
      const Eigen::VectorXd ga = cab * b - f * (caa * a);
      const Eigen::VectorXd gb = cab.transpose() * a - f * (cbb * b);
      Eigen::VectorXd a2 = a + step * ga;
      Eigen::VectorXd b2 = b + step * gb;
      normalize(a2, caa);
      normalize(b2, cbb);
      const double f2 = objective(a2, b2);
      if (f2 >= f) {
        const bool done = f2 - f < options.tol;
        a = std::move(a2);
        b = std::move(b2);
        f = f2;
        step *= 1.5;
        if (done && ga.norm() + gb.norm() < 1e-10 * std::max(1.0, scale)) break;
      } else {
        step *= 0.5;
      }
    }
    best = std::max(best, f);
  }
  return best;
}

std::map<std::string, std::uint64_t> scan_contexts(std::span<const std::string> lines, const std::string& entity,
                                                   std::size_t window) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& line : lines) {
    std::istringstream ss(line);
    std::vector<std::string> toks;
    for (std::string t; ss >> t;) toks.push_back(t);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i] != entity) continue;
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(toks.size(), i + window + 1);
      if (hi - lo < 2) continue;
      std::string key;
      for (std::size_t k = lo; k < hi; ++k) {
        if (!key.empty()) key += ' ';
        key += k == i ? std::string("__") : toks[k];
      }
      ++out[key];
    }
  }
  return out;
}

}  // namespace facetset::oracles
