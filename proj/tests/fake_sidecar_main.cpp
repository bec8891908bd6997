// Stdio fake sidecar for client and CLI tests.
//   fake_sidecar [--fault NAME] [--model NAME] [--max-top-k N] [--vocab a,b,c]

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "support/fake_sidecar.hpp"

int main(int argc, char** argv) {
  facetset::testing::FakeOptions opt;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (i + 1 >= argc) {
      std::cerr << "missing value for " << arg << "\n";
      return 2;
    }
    const std::string val = argv[++i];
    if (arg == "--fault") {
      opt.fault = facetset::testing::parse_fault(val);
    } else if (arg == "--model") {
      opt.model = val;
    } else if (arg == "--max-top-k") {
      opt.max_top_k = std::atoi(val.c_str());
    } else if (arg == "--vocab") {
      opt.vocab.clear();
      std::stringstream ss(val);
      for (std::string w; std::getline(ss, w, ',');) opt.vocab.push_back(w);
    } else {
      std::cerr << "unknown flag " << arg << "\n";
      return 2;
    }
  }
  facetset::testing::serve(STDIN_FILENO, STDOUT_FILENO, opt);
  return 0;
}
