#pragma once

// Seeded random instance suites that pit the library against the oracles.

#include <cstdint>
#include <string>
#include <vector>

namespace facetset::oracles {

struct SuiteReport {
  std::string name;
  int instances = 0;
  int checked = 0;   // instances that entered the comparison
  int skipped = 0;   // e.g. non-converged affinity runs
  int failures = 0;
  double worst = 0.0;  // largest deviation seen, where meaningful
  double seconds = 0.0;
  std::vector<std::string> notes;  // one line per failure

  bool passed() const { return failures == 0 && checked > 0; }
};

// n in [2, 8] points in the plane, negative squared Euclidean similarity,
// median preference. Converged exemplar sets must be a brute-force optimum.
SuiteReport affinity_suite(int instances = 50, std::uint64_t seed = 2024);

// d <= 10, m, n <= 6, ridge 1e-3: library correlation vs gradient ascent.
SuiteReport correlation_suite(int instances = 20, std::uint64_t seed = 99, double tolerance = 1e-4);

}  // namespace facetset::oracles
