#ifndef GENLAB_COALESCENT_HPP
#define GENLAB_COALESCENT_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "genlab/massdiff.hpp"
#include "genlab/rng.hpp"
#include "genlab/umspace.hpp"

namespace genlab {

// Kingman coalescent on {1..n} enriched with dual distances and the
// Feynman-Kac weight accumulator. Blocks are ordered by least elements.
class CoalescentState {
 public:
  explicit CoalescentState(std::size_t n);

  std::size_t n() const { return n_; }
  std::size_t block_count() const { return blocks_.size(); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  int block_of(int element) const { return block_of_[element]; }
  double clock() const { return clock_; }
  double fk_log_weight() const { return fk_log_weight_; }
  bool forced_coalescence() const { return forced_; }

  // Dual distance r'_{ij}: grows at speed 2 while i and j sit in different
  // blocks, frozen at coalescence. Exactly 2*clock for separated pairs.
  double dual_distance(int i, int j) const;
  // Calendar time at which i and j entered a common block (nullopt if never).
  std::optional<double> coalescence_time(int i, int j) const;

  // advance the clock without events (accumulates nothing by itself)
  void advance_to(double t) { clock_ = t; }
  void add_fk_log(double w) { fk_log_weight_ += w; }
  void merge_blocks(std::size_t bi, std::size_t bj, double at_time);
  void mark_forced() { forced_ = true; }

 private:
  std::size_t n_;
  std::vector<std::vector<int>> blocks_;
  std::vector<int> block_of_;
  std::vector<double> coal_time_;  // n x n, inf when never coalesced
  double clock_ = 0.0;
  double fk_log_weight_ = 0.0;
  bool forced_ = false;
};

// Homogeneous enriched Kingman coalescent run to time t: pairs coalesce at
// rate b, the FK exponent accumulates b*C(k,2) + a*k over block-count
// constancy intervals.
CoalescentState run_kingman_enriched(std::size_t n, double t,
                                     const ModelParams& p, Rng& rng);

struct DualEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double effective_sample_size = 0.0;
  bool low_ess_warning = false;
};

inline constexpr double kEssWarnThreshold = 100.0;

// Feynman-Kac dual estimate of E[Phi(U_t)] started from u0: simulates the
// enriched coalescent, evaluates the duality function H against u0 with
// block representatives drawn mass-proportionally (exact enumeration on
// small trees), and reweights by the FK factor.
DualEstimate dual_moment_estimate(const Dendrogram& u0, const Polynomial& poly,
                                  double t, const ModelParams& p,
                                  std::size_t n_mc, Rng& rng);

// Time-inhomogeneous pair-coalescence at rate b / u(t_end - s) in backward
// time s, for a given total-mass path. When the cumulative rate exceeds
// rate_cap the remaining blocks are merged at that point (the path has an
// entrance/extinction zero whose rate integral diverges).
inline constexpr double kConditionedRateCap = 50.0;

CoalescentState run_conditioned_coalescent(const MassPath& path,
                                           std::size_t n, Rng& rng,
                                           const ModelParams& p);

// Backward coalescence time of one pair of lineages under the conditioned
// dual; nullopt if the pair has not coalesced by the window start. The pair
// distance at t_end is 2*tau (or 2*(t_end - start) if never).
std::optional<double> pair_coalescence_backward(const MassPath& path,
                                                const ModelParams& p,
                                                Rng& rng);

// Spatial dual: blocks carry sites of a cyclic torus, migrate independently
// at rate cmig with the given stepping law, coalesce at rate b while
// co-located; the FK exponent accumulates b * #(co-located unordered pairs).
struct SpatialDualConfig {
  int sites = 2;
  double cmig = 1.0;
  bool uniform_kernel = false;  // false: nearest-neighbour steps
};

// Estimates E[prod_i mass at site xi_i at time t] for the super random walk
// started from init_mass per site (deg = xi.size() in {1, 2}).
DualEstimate spatial_dual_moment(const std::vector<double>& init_mass,
                                 const std::vector<int>& xi, double t,
                                 const ModelParams& p,
                                 const SpatialDualConfig& cfg, std::size_t n_mc,
                                 Rng& rng);

}  // namespace genlab

#endif  // GENLAB_COALESCENT_HPP
