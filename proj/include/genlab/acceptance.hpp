#ifndef GENLAB_ACCEPTANCE_HPP
#define GENLAB_ACCEPTANCE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace genlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double runtime_seconds = 0.0;
};

// Runs the acceptance criteria at their pinned tolerances. quick mode trims
// replicate counts for smoke runs and is not the acceptance gate.
std::vector<CriterionResult> run_acceptance(std::uint64_t master_seed,
                                            bool quick = false,
                                            int threads = 0);

// One line per criterion on stdout; returns true iff all pass.
bool print_acceptance_report(const std::vector<CriterionResult>& results);

}  // namespace genlab

#endif  // GENLAB_ACCEPTANCE_HPP
