#ifndef GENLAB_CONDITIONED_HPP
#define GENLAB_CONDITIONED_HPP

#include <string>
#include <vector>

#include "genlab/massdiff.hpp"
#include "genlab/rng.hpp"
#include "genlab/stats.hpp"
#include "genlab/umspace.hpp"

namespace genlab {

// A dendrogram together with the scales that were applied to it.
struct ScaledTree {
  Dendrogram base;
  double mass_scale = 1.0;
  double distance_scale = 1.0;

  Dendrogram apply() const {
    return scale_tree(base, mass_scale, distance_scale);
  }
};

// Which normalization the rescaling reports use:
//   plain_t:  [U, r/t, mu/t]
//   b_scaled: [U, b r/t, mu/(b t)]
enum class KyNormalization { plain_t, b_scaled };

// Tree of the Feller diffusion conditioned on survival until T, observed at
// time t <= T: conditioned mass path driving a Moran genealogy with K
// particles. x0 = 0 starts from the entrance law.
Dendrogram sample_T_conditioned_tree(double x0, double T, double t,
                                     std::size_t K, const ModelParams& p,
                                     Rng& rng, std::size_t grid_steps = 512);

// Q-process tree: mass is CIR with immigration b; genealogy Moran-driven.
Dendrogram sample_q_process_tree(double x0, double t, std::size_t K,
                                 const ModelParams& p, Rng& rng,
                                 std::size_t grid_steps = 512);

struct KallenbergReport {
  stats::TestResult mass_ks;          // size-biased vs Feller + CIR-from-0 sum
  stats::TestResult ballcount_chisq;  // depth-t counts vs 1 + Poisson
  double poly_sizebiased = 0.0;       // degree-2 truncated polynomial
  double poly_sizebiased_se = 0.0;
  double poly_sum = 0.0;              // independent-sum counterpart
  double poly_sum_se = 0.0;
  double poly_zscore = 0.0;
  bool pass(double alpha = 0.01) const {
    return mass_ks.p_value > alpha && ballcount_chisq.p_value > alpha &&
           std::abs(poly_zscore) < 3.0;
  }
};

// Compares size-biased Feller draws (importance resampling by mass) with
// independent Feller + Kallenberg-tree draws at time t: mass law, depth-t
// ball counts, and a degree-2 truncated polynomial.
KallenbergReport kallenberg_decompose_check(double x0, double t,
                                            const ModelParams& p,
                                            std::size_t n_mc, Rng& rng,
                                            int threads = 0);

// Backbone: inhomogeneous PPP of split times on [0, t - eps] with intensity
// 2/(t-s); each point contributes an independent T-conditioned entrance-law
// family of depth t-s, sliding-concatenated (cross-distance to everything
// later is 2(t-s)). Split times in (t - eps, t] are lumped into one leaf of
// mass CIR-from-0 over eps (Gamma(2, b eps / 2)).
Dendrogram sample_backbone_tree(double t, const ModelParams& p,
                                double epsilon_cut, Rng& rng,
                                std::size_t K_family = 12,
                                std::size_t grid_steps = 256);

struct KyStatistic {
  std::string statistic;
  std::string paper_target;
  double estimate = 0.0;
  double se = 0.0;
  double p_value = 1.0;
  bool pass = true;
};

struct KyReport {
  std::vector<KyStatistic> rows;
  bool all_pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

enum class KyFamily { feller_conditioned, q_process, backbone };

// Rescales the chosen family by 1/t across the grid of horizons and tests
// (i) the limiting mass law (Exp(mean b/2) for the conditioned Feller,
// Gamma(2, b/2) for Q/Palm/backbone), (ii) stabilization of normalized
// pair-distance histograms, (iii) the size-bias relation between the two
// limit laws, and the m = 2 closed-form pair-distance moment.
KyReport ky_rescale_and_test(KyFamily family, const std::vector<double>& t_grid,
                             const ModelParams& p, std::size_t n_mc, Rng& rng,
                             KyNormalization norm = KyNormalization::plain_t);

// Exact scale identity of the conditioned drift (invariance under
// simultaneous mass/time/horizon scaling); returns the maximal absolute
// discrepancy over a probe grid with power-of-two scale factors.
double conditioned_drift_scale_invariance_gap();

// Unbiased one-pair estimate of Phi_h with phi(r) = r 1{r < 2h} against the
// atomless ideal represented by a concatenation of Moran families: leaves
// are sampled mass-proportionally and a pair landing in the same family
// (equal leaf tags) is redrawn uniformly among that family's other leaves.
double ideal_pair_truncated_poly(const Dendrogram& tree, double h, Rng& rng);

}  // namespace genlab

#endif  // GENLAB_CONDITIONED_HPP
