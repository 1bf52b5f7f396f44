#ifndef GENLAB_FORWARD_SIM_HPP
#define GENLAB_FORWARD_SIM_HPP

#include "genlab/massdiff.hpp"
#include "genlab/rng.hpp"
#include "genlab/umspace.hpp"

namespace genlab {

// Continuous-time binary Galton-Watson particle system at mass scale N:
// each particle branches at rate bN into 2 offspring with probability
// p_N = 1/2 + a/(2bN), into 0 otherwise. Survivors at time t carry mass 1/N;
// distances are twice the time to the most recent common ancestor. Extinct
// runs return the null tree.
Dendrogram simulate_gw_genealogy(std::size_t N, double x0, double t,
                                 const ModelParams& p, Rng& rng);

// Same dynamics started from the particle reading of an initial state:
// floor(N * mass) particles per leaf of init; cross-clan distances extend
// the initial distances by 2t.
Dendrogram simulate_gw_genealogy_from(std::size_t N, const Dendrogram& init,
                                      double t, const ModelParams& p,
                                      Rng& rng);

// How an immigrant relates to the standing population.
//   root: distance 2s to everybody alive at its arrival time s (the clan
//     joins at the root level, as in the plain immigration particle model).
//   immortal_line: the immigrant splits off a single distinguished line, so
//     clans arriving at s < s' are at distance 2(t - s) at observation time
//     t (the Evans reading; used for backbone comparisons).
enum class ImmigrantAttach { root, immortal_line };

Dendrogram simulate_immigration_genealogy(std::size_t N, double t,
                                          const ModelParams& p, Rng& rng,
                                          ImmigrantAttach attach,
                                          double x0 = 0.0);

// Moran genealogy of K particles driven by a total-mass path: every
// unordered pair resamples at rate b / u(s) at time s, so a sampled pair of
// lineages coalesces backwards at exactly the conditioned dual rate. The
// returned dendrogram carries leaf masses u(t_end)/K (the state is the
// terminal mass times the Fleming-Viot genealogy). A path that is zero at
// its end gives the null tree; entrance paths (zero at the start) are
// started at the first positive grid point.
//
// Leaves are tagged with their particle slot when leaf_tag is -1, else all
// carry leaf_tag (used to mark family identity in concatenations).
Dendrogram simulate_moran_given_mass(const MassPath& path, std::size_t K,
                                     const ModelParams& p, Rng& rng,
                                     int leaf_tag = -1);

// sum over open 2s-balls of (ball mass)^2; the pair-mass nu^2([0,2s)).
double pair_mass_below(const Dendrogram& tree, double s);

// Off-diagonal pair mass rescaled to the atomless ideal:
// (sum_ball m^2 - sum_leaf m^2) / (1 - sum_leaf (m/M)^2). On a K-particle
// Moran tree this is the unbiased estimate of nu^2([0,2s)) of the
// represented mass-times-Fleming-Viot state for any K.
double pair_mass_below_ideal(const Dendrogram& tree, double s);

}  // namespace genlab

#endif  // GENLAB_FORWARD_SIM_HPP
