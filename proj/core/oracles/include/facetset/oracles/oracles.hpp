#pragma once

// Independent reference computations used by the test suites and by
// `facetset selftest`. Nothing here shares code paths with the routines it
// checks.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace facetset::oracles {

struct ExemplarOptimum {
  double best = 0.0;
  // Every exemplar subset (sorted) whose net similarity is within tol of best.
  std::vector<std::vector<std::size_t>> optimal_sets;
};

// Exhaustive search over all non-empty exemplar subsets of an n <= 16 node
// similarity matrix (diagonal = preferences). Non-exemplars join their most
// similar exemplar.
ExemplarOptimum brute_force_exemplars(const Eigen::MatrixXd& s, double tol = 1e-9);

double net_similarity_of(const Eigen::MatrixXd& s, const std::vector<std::size_t>& exemplars);

struct AscentOptions {
  int restarts = 8;
  int max_iter = 20000;
  double tol = 1e-13;
  std::uint64_t seed = 1;
};

// Maximizes a'X'Yb / sqrt(a'(X'X + ridge I)a * b'(Y'Y + ridge I)b) by
// normalized gradient ascent over (a, b) with random restarts. ridge = 0
// gives the plain cosine objective.
double cca_by_gradient_ascent(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge,
                              const AscentOptions& options = {});

// Linear scan over raw lines: every occurrence of `entity` contributes the
// canonical window "l1 .. lW __ r1 .. rW". Tokenization is whitespace split
// of already-normalized text.
std::map<std::string, std::uint64_t> scan_contexts(std::span<const std::string> lines, const std::string& entity,
                                                   std::size_t window);

}  // namespace facetset::oracles
