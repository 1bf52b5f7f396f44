#ifndef GENLAB_TESTS_SUPPORT_HPP
#define GENLAB_TESTS_SUPPORT_HPP

#include <vector>

#include "genlab/rng.hpp"
#include "genlab/umspace.hpp"

namespace genlab::testsupport {

// Random dendrogram by repeated pairwise merging at increasing heights.
inline Dendrogram random_tree(Rng& rng, int max_leaves, double mass_hi = 2.0,
                              double height_step = 0.4) {
  int n = 1 + static_cast<int>(rng.uniform_index(
                  static_cast<std::size_t>(max_leaves)));
  Dendrogram d;
  std::vector<NodeId> pieces;
  std::vector<double> heights;
  for (int i = 0; i < n; ++i) {
    pieces.push_back(d.add_leaf(rng.uniform() * mass_hi));
    heights.push_back(0.0);
  }
  while (pieces.size() > 1) {
    std::size_t i = rng.uniform_index(pieces.size());
    std::size_t j = rng.uniform_index(pieces.size() - 1);
    if (j >= i) ++j;
    double h = std::max(heights[i], heights[j]) +
               rng.uniform() * height_step + 1e-9;
    NodeId kids[2] = {pieces[i], pieces[j]};
    NodeId m = d.add_merge(h, kids);
    if (i > j) std::swap(i, j);
    pieces[i] = m;
    heights[i] = h;
    pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(j));
    heights.erase(heights.begin() + static_cast<std::ptrdiff_t>(j));
  }
  d.finalize();
  return d;
}

}  // namespace genlab::testsupport

#endif
