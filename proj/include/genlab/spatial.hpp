#ifndef GENLAB_SPATIAL_HPP
#define GENLAB_SPATIAL_HPP

#include <functional>
#include <vector>

#include "genlab/massdiff.hpp"
#include "genlab/rng.hpp"
#include "genlab/umspace.hpp"

namespace genlab {

// Geographic space: cyclic torus Z_sites with a nearest-neighbour or
// uniform stepping law (uniform over the other sites).
struct SpatialParams {
  ModelParams base;
  double cmig = 1.0;
  int sites = 2;
  bool uniform_kernel = false;
};

// Dendrogram plus a site mark per leaf.
struct MarkedDendrogram {
  Dendrogram base;
  std::vector<int> marks;  // aligned with base.leaves()

  std::vector<double> site_masses(int sites) const;
};

// Critical branching particles at scale N that migrate at rate cmig;
// genealogy and terminal marks recorded. init_mass is per site.
MarkedDendrogram simulate_spatial_genealogy(std::size_t N,
                                            const std::vector<double>& init_mass,
                                            double t, const SpatialParams& sp,
                                            Rng& rng);

// Mass-proportional sampling of marked leaves; evaluates
// phi(distances) * g(marks). Exact enumeration on small trees.
Estimate spatial_polynomial_estimate(
    const MarkedDendrogram& tree, int degree,
    const std::function<double(const DistanceMatrix&)>& phi,
    const std::function<double(const std::vector<int>&)>& g, std::size_t n_mc,
    Rng& rng);

// First and second moments of the site-mass vector of the super random walk
// at time t (RK4 on the closed moment equations; the closed-form oracle for
// the duality tests).
struct SiteMoments {
  std::vector<double> mean;            // E[y_xi]
  std::vector<std::vector<double>> second;  // E[y_xi y_eta]
};
SiteMoments site_moment_oracle(const std::vector<double>& init_mass, double t,
                               const SpatialParams& sp,
                               std::size_t rk_steps = 20000);

}  // namespace genlab

#endif  // GENLAB_SPATIAL_HPP
