#include "genlab/coxcluster.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace genlab {

double yule_family_mass_mean(double h, const ModelParams& p) {
  if (p.a == 0.0) return 0.5 * p.b * h;
  return 0.5 * p.b * std::expm1(p.a * h) / p.a;
}

namespace {

// Next split time of an individual alive at time s, for the size-biased
// single-family splitting rate: survival function
//   critical:      S(s') = (h - s') / (h - s)
//   non-critical:  S(s') = (e^{-a s'} - e^{-a h}) / (e^{-a s} - e^{-a h}).
double next_split_time(double s, double h, double a, Rng& rng) {
  double u = rng.uniform_positive();
  if (a == 0.0) return h - (h - s) * u;
  double eah = std::exp(-a * h);
  double target = eah + u * (std::exp(-a * s) - eah);
  return -std::log(target) / a;
}

}  // namespace

Dendrogram sample_yule_family(double h, const ModelParams& p,
                              double epsilon_cut, Rng& rng) {
  if (!(h > 0.0)) throw std::invalid_argument("yule family: h > 0");
  if (!(epsilon_cut > 0.0) || epsilon_cut >= h)
    throw std::invalid_argument("yule family: 0 < epsilon_cut < h");

  double cut = h - epsilon_cut;
  double leaf_mean = yule_family_mass_mean(epsilon_cut, p);

  Dendrogram out;
  std::function<NodeId(double)> grow = [&](double birth) -> NodeId {
    double s = next_split_time(birth, h, p.a, rng);
    if (s >= cut) return out.add_leaf(rng.exp_mean(leaf_mean));
    NodeId kids[2] = {grow(s), grow(s)};
    return out.add_merge(h - s, kids);
  };
  grow(0.0);
  out.finalize();
  return out;
}

CoxComposition compose_cox_state_detail(double x0, double t, double h,
                                        const ModelParams& p,
                                        double epsilon_cut, Rng& rng) {
  if (!(t > 0.0) || !(h > 0.0) || h > t)
    throw std::invalid_argument("compose_cox_state: 0 < h <= t");
  if (x0 < 0.0) throw std::invalid_argument("compose_cox_state: x0 >= 0");
  if (epsilon_cut <= 0.0) epsilon_cut = kDefaultYuleCutFraction * h;

  CoxComposition out;
  double y = h == t ? x0 : sample_feller_exact(x0, t - h, p, rng);
  out.driving_mass = y;
  if (y <= 0.0) {
    out.tree = Dendrogram::null_tree();
    return out;
  }
  long long n = rng.poisson(y * laplace_exponent_u_inf(h, p));
  out.family_count = n;
  Dendrogram acc = Dendrogram::null_tree();
  for (long long i = 0; i < n; ++i)
    acc = concatenate_h(acc, sample_yule_family(h, p, epsilon_cut, rng), h);
  out.tree = std::move(acc);
  return out;
}

Dendrogram compose_cox_state(double x0, double t, double h,
                             const ModelParams& p, Rng& rng) {
  return compose_cox_state_detail(x0, t, h, p, 0.0, rng).tree;
}

Dendrogram compose_cox_given_mass(double y, double h, const ModelParams& p,
                                  double epsilon_cut, Rng& rng) {
  if (!(h > 0.0) || y < 0.0)
    throw std::invalid_argument("compose_cox_given_mass: h > 0, y >= 0");
  if (epsilon_cut <= 0.0) epsilon_cut = kDefaultYuleCutFraction * h;
  if (y == 0.0) return Dendrogram::null_tree();
  long long n = rng.poisson(y * laplace_exponent_u_inf(h, p));
  Dendrogram acc = Dendrogram::null_tree();
  for (long long i = 0; i < n; ++i)
    acc = concatenate_h(acc, sample_yule_family(h, p, epsilon_cut, rng), h);
  return acc;
}

CoxMass compose_cox_mass(double x0, double t, double h, const ModelParams& p,
                         double epsilon_cut, Rng& rng) {
  if (!(t > 0.0) || !(h > 0.0) || h > t)
    throw std::invalid_argument("compose_cox_mass: 0 < h <= t");
  if (epsilon_cut <= 0.0) epsilon_cut = kDefaultYuleCutFraction * h;
  CoxMass out;
  double y = h == t ? x0 : sample_feller_exact(x0, t - h, p, rng);
  if (y <= 0.0) return out;
  out.family_count = rng.poisson(y * laplace_exponent_u_inf(h, p));
  for (long long i = 0; i < out.family_count; ++i)
    out.mass += sample_yule_family_mass(h, p, epsilon_cut, rng);
  return out;
}

double sample_yule_family_mass(double h, const ModelParams& p,
                               double epsilon_cut, Rng& rng) {
  if (!(h > 0.0)) throw std::invalid_argument("yule family: h > 0");
  if (!(epsilon_cut > 0.0) || epsilon_cut >= h)
    throw std::invalid_argument("yule family: 0 < epsilon_cut < h");
  double cut = h - epsilon_cut;
  double leaf_mean = yule_family_mass_mean(epsilon_cut, p);
  double mass = 0.0;
  std::function<void(double)> grow = [&](double birth) {
    double s = next_split_time(birth, h, p.a, rng);
    if (s >= cut) {
      mass += rng.exp_mean(leaf_mean);
      return;
    }
    grow(s);
    grow(s);
  };
  grow(0.0);
  return mass;
}

double ballcount_generating_function(double h, double hprime, double q,
                                     const ModelParams& p) {
  if (!(h > 0.0) || !(hprime > 0.0) || hprime >= h)
    throw std::invalid_argument("ballcount gf: 0 < h' < h");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("ballcount gf: q in [0,1]");
  if (q == 1.0) return 1.0;
  double uhp_inf = laplace_exponent_u_inf(hprime, p);
  return 1.0 - laplace_exponent_u(h - hprime, (1.0 - q) * uhp_inf, p) /
                   laplace_exponent_u_inf(h, p);
}

double ballcount_pmf(double h, double hprime, long long k,
                     const ModelParams& p) {
  if (k < 1) return 0.0;
  double succ, fail;
  if (p.a == 0.0) {
    succ = hprime / h;
    fail = (h - hprime) / h;
  } else {
    double eh = std::exp(-p.a * h);
    double es = std::exp(-p.a * (h - hprime));
    fail = (es - 1.0) / (eh - 1.0);
    succ = (eh - es) / (eh - 1.0);
  }
  return succ * std::pow(fail, static_cast<double>(k - 1));
}

double cox_levy_density(double y, double t, double h, const ModelParams& p) {
  if (!(t > h) || !(h > 0.0))
    throw std::invalid_argument("cox_levy_density: 0 < h < t");
  if (y < 0.0) return 0.0;
  double m = 0.5 * (t - h) * p.b;
  return std::exp(-y / m) / (m * m);
}

}  // namespace genlab
