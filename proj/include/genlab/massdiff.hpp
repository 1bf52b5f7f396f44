#ifndef GENLAB_MASSDIFF_HPP
#define GENLAB_MASSDIFF_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "genlab/rng.hpp"

namespace genlab {

// Branching rate b, criticality drift a, immigration rate c. The total mass
// solves dZ = c dt + a Z dt + sqrt(b Z) dB.
struct ModelParams {
  double b = 1.0;
  double a = 0.0;
  double c = 0.0;
};

struct MassPath {
  std::vector<double> grid;    // strictly increasing times
  std::vector<double> values;  // nonnegative, absorbed at 0 when c = 0
  std::optional<std::size_t> extinction_index;

  double terminal() const { return values.back(); }
  double t_end() const { return grid.back(); }
  // Linear interpolation of the value at time s.
  double at(double s) const;
  std::string to_csv() const;  // header "t,z"
};

std::vector<double> uniform_grid(double t0, double t1, std::size_t steps);

// Laplace exponent u_t(lambda) with E_x[exp(-lambda Z_t)] = exp(-x u_t(lambda)),
// continuous through a -> 0.
double laplace_exponent_u(double t, double lambda, const ModelParams& p);
// u_t(infinity); 2/(bt) in the critical case.
double laplace_exponent_u_inf(double t, const ModelParams& p);

double survival_probability(double x, double t, const ModelParams& p);

// Exact transition draw of the Feller diffusion (c = 0): compound Poisson of
// exponential family masses, matching the closed-form Laplace transform.
// Mean family mass; bt/2 in the critical case.
double feller_family_mass_mean(double t, const ModelParams& p);
double sample_feller_exact(double x, double t, const ModelParams& p, Rng& rng);

// Exact-skeleton path on a grid: chained exact transitions.
MassPath sample_path_exact(double x, const ModelParams& p,
                           const std::vector<double>& grid, Rng& rng);

// Full-truncation Euler-Maruyama path for dZ = (c + aZ) dt + sqrt(bZ) dB.
MassPath sample_path_em(double x, const ModelParams& p,
                        const std::vector<double>& grid, Rng& rng);

// Terminal values of `n` independent EM paths, evolved in lockstep.
std::vector<double> em_terminal_batch(double x, const ModelParams& p, double t,
                                      std::size_t steps, std::size_t n,
                                      Rng& rng);

// Drift and variance rate of the Feller diffusion conditioned to survive
// until T, evaluated at time s < T and mass x (critical case).
struct DriftVar {
  double drift = 0.0;
  double variance_rate = 0.0;
};
DriftVar conditioned_coefficients(double s, double x, double T,
                                  const ModelParams& p);

// Laplace transform of the conditioned transition kernel,
// E[exp(-lambda Z_t) | Z_s = x, Z_T > 0] (critical case).
double laplace_conditioned(double x, double s, double t, double T,
                           double lambda, const ModelParams& p);

struct CoefficientReport {
  double drift_closed = 0.0;
  double drift_numeric = 0.0;
  double drift_rel_err = 0.0;
  double var_closed = 0.0;
  double var_numeric = 0.0;
  double var_rel_err = 0.0;
  double rejected_variance = 0.0;  // x * (2 + drift), the rejected formula
  double rejected_rel_dev = 0.0;
};

// Differentiates exp(lambda x) L^T(x,s,s+h;lambda) at lambda = 0 over a
// shrinking h-sequence and Richardson-extrapolates h -> 0; compares against
// conditioned_coefficients and against the rejected variance formula.
CoefficientReport verify_conditioned_coefficients(double s, double x, double T,
                                                  const ModelParams& p,
                                                  double h0 = 0.0);

enum class ConditionedMethod { rejection, sde };

inline constexpr std::size_t kRejectionCap = 1'000'000;

// Path of the Feller diffusion conditioned on Z_T > 0. The rejection method
// resamples exact-skeleton paths until the terminal mass is positive (x > 0
// required); the sde method runs EM with the conditioned coefficients and
// supports the x -> 0 entrance start.
MassPath sample_conditioned_mass_path(double x, double T,
                                      const std::vector<double>& grid,
                                      const ModelParams& p, Rng& rng,
                                      ConditionedMethod method);

// CIR-with-immigration transition (c = b, the Q-process mass), sampled
// exactly as Feller plus an independent Gamma(2, bt/2) immigration part.
double sample_cir_immigration_exact(double x, double t, const ModelParams& p,
                                    Rng& rng);

// Exact-skeleton CIR path (c = b): chained exact transitions on the grid.
MassPath sample_cir_path_exact(double x, const ModelParams& p,
                               const std::vector<double>& grid, Rng& rng);

// Entrance step of the T-conditioned diffusion: the law of Z_u given
// Z_0 -> 0 and survival until R, a difference of exponentials realized as
// Exp(mean bu/2) + Exp(mean (b/2) u (R-u) / R).
double sample_conditioned_entrance(double u, double R, const ModelParams& p,
                                   Rng& rng);

}  // namespace genlab

#endif  // GENLAB_MASSDIFF_HPP
