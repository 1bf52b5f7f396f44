#ifndef GENLAB_COXCLUSTER_HPP
#define GENLAB_COXCLUSTER_HPP

#include "genlab/massdiff.hpp"
#include "genlab/rng.hpp"
#include "genlab/umspace.hpp"

namespace genlab {

inline constexpr double kDefaultYuleCutFraction = 1e-3;

// Single-ancestor depth-h family: inhomogeneous Yule tree split at
// per-individual rate 1/(h-s) at time s (non-critical:
// a e^{-as}/(e^{-as} - e^{-ah})), run to h - epsilon_cut, with i.i.d.
// exponential leaf masses attached at the cut. The total mass law is exact
// for every cut; only structure below depth epsilon_cut is lumped.
Dendrogram sample_yule_family(double h, const ModelParams& p,
                              double epsilon_cut, Rng& rng);

// Exponential mean of the mass of a depth-h family ((b/2a)(e^{ah}-1),
// bh/2 in the critical case); also the Yule leaf-mass mean at depth h.
double yule_family_mass_mean(double h, const ModelParams& p);

struct CoxComposition {
  Dendrogram tree;
  double driving_mass = 0.0;     // Y_{t-h}
  long long family_count = 0;    // Poisson(Y_{t-h} * u_h(inf))
};

// Cox cluster state at time t seen at depth h: draws Y_{t-h} exactly from
// x0, then Poisson(Y u_h(inf)) i.i.d. depth-h families h-concatenated.
CoxComposition compose_cox_state_detail(double x0, double t, double h,
                                        const ModelParams& p,
                                        double epsilon_cut, Rng& rng);

Dendrogram compose_cox_state(double x0, double t, double h,
                             const ModelParams& p, Rng& rng);

// Composition with the driving mass pinned (the conditional state given
// Y_{t-h} = y): Poisson(y u_h(inf)) families h-concatenated.
Dendrogram compose_cox_given_mass(double y, double h, const ModelParams& p,
                                  double epsilon_cut, Rng& rng);

// Total family mass without building the tree (same recursion and draws as
// sample_yule_family, minus the structure).
double sample_yule_family_mass(double h, const ModelParams& p,
                               double epsilon_cut, Rng& rng);

struct CoxMass {
  double mass = 0.0;
  long long family_count = 0;
};

// Mass and family count of a composition without building trees.
CoxMass compose_cox_mass(double x0, double t, double h, const ModelParams& p,
                         double epsilon_cut, Rng& rng);

// Generating function of the number of open 2h'-balls inside one depth-h
// family: g(q) = 1 - u_{h-h'}((1-q) u_{h'}(inf)) / u_h(inf).
double ballcount_generating_function(double h, double hprime, double q,
                                     const ModelParams& p);

// P(Z = k) of that ball count: geometric on {1,2,...} with
// P(k) = (h'/h) ((h-h')/h)^{k-1} in the critical case.
double ballcount_pmf(double h, double hprime, long long k,
                     const ModelParams& p);

// Levy density of the Cox measure m_h^t at mass y:
// (1/m^2) exp(-y/m) with m = (t-h) b / 2.
double cox_levy_density(double y, double t, double h, const ModelParams& p);

}  // namespace genlab

#endif  // GENLAB_COXCLUSTER_HPP
