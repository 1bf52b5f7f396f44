// Acceptance gate: one pass/fail line per criterion; exit 0 iff all pass.

#include <cstdlib>
#include <cstring>

#include "genlab/acceptance.hpp"

int main(int argc, char** argv) {
  bool quick = false;
  std::uint64_t seed = 20240817;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;
    if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
      seed = std::strtoull(argv[i + 1], nullptr, 10);
  }
  auto results = genlab::run_acceptance(seed, quick, 0);
  return genlab::print_acceptance_report(results) ? 0 : 1;
}
