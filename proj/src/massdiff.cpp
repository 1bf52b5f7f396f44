#include "genlab/massdiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "genlab/kernels.hpp"

namespace genlab {

double MassPath::at(double s) const {
  if (s <= grid.front()) return values.front();
  if (s >= grid.back()) return values.back();
  auto it = std::upper_bound(grid.begin(), grid.end(), s);
  std::size_t hi = static_cast<std::size_t>(it - grid.begin());
  std::size_t lo = hi - 1;
  double w = (s - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

std::string MassPath::to_csv() const {
  std::string out = "t,z\n";
  char buf[64];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", grid[i], values[i]);
    out += buf;
  }
  return out;
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t steps) {
  if (!(t1 > t0)) throw std::invalid_argument("uniform_grid: t1 > t0");
  if (steps < 1) throw std::invalid_argument("uniform_grid: steps >= 1");
  std::vector<double> g(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i)
    g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(steps);
  g.back() = t1;
  return g;
}

namespace {

// (1 - exp(-a t)) / a, continuous at a = 0 where it equals t.
double decay_time(double a, double t) {
  if (a == 0.0) return t;
  return -std::expm1(-a * t) / a;
}

// (exp(a t) - 1) / a, continuous at a = 0 where it equals t.
double growth_time(double a, double t) {
  if (a == 0.0) return t;
  return std::expm1(a * t) / a;
}

}  // namespace

double laplace_exponent_u(double t, double lambda, const ModelParams& p) {
  if (lambda < 0.0 || t < 0.0)
    throw std::invalid_argument("laplace_exponent_u: lambda, t >= 0");
  if (t == 0.0) return lambda;
  // 2a lambda / (2a e^{-at} + b lambda (1 - e^{-at}))
  //   = 2 lambda / (2 e^{-at} + b lambda decay_time(a, t))
  return 2.0 * lambda /
         (2.0 * std::exp(-p.a * t) + p.b * lambda * decay_time(p.a, t));
}

double laplace_exponent_u_inf(double t, const ModelParams& p) {
  if (!(t > 0.0)) throw std::invalid_argument("u_inf: t > 0");
  return 2.0 / (p.b * decay_time(p.a, t));
}

double survival_probability(double x, double t, const ModelParams& p) {
  if (x < 0.0 || !(t > 0.0))
    throw std::invalid_argument("survival_probability: x >= 0, t > 0");
  if (x == 0.0) return 0.0;
  return -std::expm1(-x * laplace_exponent_u_inf(t, p));
}

double feller_family_mass_mean(double t, const ModelParams& p) {
  return 0.5 * p.b * growth_time(p.a, t);
}

double sample_feller_exact(double x, double t, const ModelParams& p,
                           Rng& rng) {
  if (x < 0.0 || !(t > 0.0))
    throw std::invalid_argument("sample_feller_exact: x >= 0, t > 0");
  if (p.c != 0.0)
    throw std::invalid_argument("sample_feller_exact: c = 0 required");
  if (x == 0.0) return 0.0;
  long long n = rng.poisson(x * laplace_exponent_u_inf(t, p));
  if (n == 0) return 0.0;
  return rng.gamma(static_cast<double>(n), feller_family_mass_mean(t, p));
}

MassPath sample_path_exact(double x, const ModelParams& p,
                           const std::vector<double>& grid, Rng& rng) {
  MassPath path;
  path.grid = grid;
  path.values.resize(grid.size());
  path.values[0] = x;
  double z = x;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double dt = grid[i] - grid[i - 1];
    z = z > 0.0 ? sample_feller_exact(z, dt, p, rng) : 0.0;
    path.values[i] = z;
    if (z == 0.0 && !path.extinction_index) path.extinction_index = i;
  }
  return path;
}

MassPath sample_path_em(double x, const ModelParams& p,
                        const std::vector<double>& grid, Rng& rng) {
  MassPath path;
  path.grid = grid;
  path.values.resize(grid.size());
  path.values[0] = x;
  double z = x;
  bool absorbed = false;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (absorbed) {
      path.values[i] = 0.0;
      continue;
    }
    double dt = grid[i] - grid[i - 1];
    double zp = std::max(z, 0.0);
    z += (p.c + p.a * zp) * dt +
         std::sqrt(p.b * zp * dt) * rng.normal();
    z = std::max(z, 0.0);
    path.values[i] = z;
    if (z == 0.0 && p.c == 0.0) {
      absorbed = true;
      path.extinction_index = i;
    }
  }
  return path;
}

std::vector<double> em_terminal_batch(double x, const ModelParams& p, double t,
                                      std::size_t steps, std::size_t n,
                                      Rng& rng) {
  std::vector<double> z(n, x), gauss(n);
  double dt = t / static_cast<double>(steps);
  double sdt = std::sqrt(dt);
  const auto& ops = kernels::active();
  for (std::size_t k = 0; k < steps; ++k) {
    for (auto& g : gauss) g = rng.normal();
    ops.em_step(z.data(), gauss.data(), n, p.c, p.a, p.b, dt, sdt);
  }
  return z;
}

DriftVar conditioned_coefficients(double s, double x, double T,
                                  const ModelParams& p) {
  if (!(T > s)) throw std::invalid_argument("conditioned_coefficients: T > s");
  if (x < 0.0) throw std::invalid_argument("x >= 0");
  double rem = T - s;
  double drift;
  if (x == 0.0) {
    drift = p.b;
  } else {
    drift = (2.0 * x / rem) / std::expm1(2.0 * x / (p.b * rem));
  }
  return {drift, p.b * x};
}

double laplace_conditioned(double x, double s, double t, double T,
                           double lambda, const ModelParams& p) {
  if (!(x > 0.0) || !(T >= t) || !(t > s))
    throw std::invalid_argument("laplace_conditioned domain");
  double b = p.b;
  double h = t - s;
  double f1 = 2.0 * x * lambda / (2.0 + h * b * lambda);
  double f2 = x * (2.0 * (T - t) * lambda * b + 4.0) /
              ((T - t) * h * lambda * b * b + 2.0 * (T - s) * b);
  double surv = -std::expm1(-2.0 * x / (b * (T - s)));
  return (std::exp(-f1) - std::exp(-f2)) / surv;
}

namespace {

// Least-squares-free polynomial (Neville) extrapolation to h = 0.
double neville_extrapolate(const std::vector<double>& hs,
                           std::vector<double> vals) {
  std::size_t n = hs.size();
  for (std::size_t level = 1; level < n; ++level)
    for (std::size_t i = 0; i + level < n; ++i)
      vals[i] = (hs[i + level] * vals[i] - hs[i] * vals[i + 1]) /
                (hs[i + level] - hs[i]);
  return vals[0];
}

}  // namespace

CoefficientReport verify_conditioned_coefficients(double s, double x, double T,
                                                  const ModelParams& p,
                                                  double h0) {
  if (!(x > 0.0)) throw std::invalid_argument("verify: x > 0");
  double rem = T - s;
  if (h0 <= 0.0) h0 = 0.1 * rem;

  auto g = [&](double h, double lambda) {
    return std::exp(lambda * x) *
           laplace_conditioned(x, s, s + h, T, lambda, p);
  };

  // 4th-order central stencils in lambda.
  double delta = 3e-3 / std::max(1.0, x);
  auto d1 = [&](double h) {
    return (8.0 * (g(h, delta) - g(h, -delta)) -
            (g(h, 2.0 * delta) - g(h, -2.0 * delta))) /
           (12.0 * delta);
  };
  auto d2 = [&](double h) {
    return (-(g(h, 2.0 * delta) + g(h, -2.0 * delta)) +
            16.0 * (g(h, delta) + g(h, -delta)) - 30.0 * g(h, 0.0)) /
           (12.0 * delta * delta);
  };

  std::vector<double> hs, drifts, vars;
  for (int k = 0; k < 5; ++k) {
    double h = h0 / std::pow(2.0, k);
    hs.push_back(h);
    drifts.push_back(-d1(h) / h);
    vars.push_back(d2(h) / h);
  }
  double drift_num = neville_extrapolate(hs, drifts);
  double var_num = neville_extrapolate(hs, vars);

  DriftVar closed = conditioned_coefficients(s, x, T, p);
  CoefficientReport rep;
  rep.drift_closed = closed.drift;
  rep.drift_numeric = drift_num;
  rep.drift_rel_err = std::abs(drift_num - closed.drift) /
                      std::max(std::abs(closed.drift), 1e-300);
  rep.var_closed = closed.variance_rate;
  rep.var_numeric = var_num;
  rep.var_rel_err = std::abs(var_num - closed.variance_rate) /
                    std::max(std::abs(closed.variance_rate), 1e-300);
  rep.rejected_variance = x * (2.0 + closed.drift);
  rep.rejected_rel_dev = std::abs(rep.rejected_variance - closed.variance_rate) /
                         std::max(std::abs(closed.variance_rate), 1e-300);
  return rep;
}

MassPath sample_conditioned_mass_path(double x, double T,
                                      const std::vector<double>& grid,
                                      const ModelParams& p, Rng& rng,
                                      ConditionedMethod method) {
  if (grid.size() < 2 || grid.front() != 0.0 || grid.back() != T)
    throw std::invalid_argument("conditioned path: grid must span [0, T]");
  if (method == ConditionedMethod::rejection) {
    if (!(x > 0.0))
      throw std::invalid_argument("rejection conditioning needs x > 0");
    for (std::size_t attempt = 0; attempt < kRejectionCap; ++attempt) {
      MassPath path = sample_path_exact(x, p, grid, rng);
      if (path.terminal() > 0.0) return path;
    }
    throw std::runtime_error("rejection conditioning: attempt cap exceeded");
  }

  // SDE route: EM with the corrected T-conditioned coefficients; supports
  // the entrance start x = 0 (exact first step, then EM).
  MassPath path;
  path.grid = grid;
  path.values.resize(grid.size());
  path.values[0] = x;
  double z = x;
  std::size_t first = 1;
  if (x == 0.0) {
    z = sample_conditioned_entrance(grid[1] - grid[0], T, p, rng);
    path.values[1] = z;
    first = 2;
  }
  for (std::size_t i = first; i < grid.size(); ++i) {
    double s = grid[i - 1];
    double dt = grid[i] - s;
    double zp = std::max(z, 0.0);
    DriftVar dv = conditioned_coefficients(s, zp, T, p);
    z += dv.drift * dt + std::sqrt(dv.variance_rate * dt) * rng.normal();
    z = std::max(z, 0.0);
    path.values[i] = z;
  }
  return path;
}

double sample_cir_immigration_exact(double x, double t, const ModelParams& p,
                                    Rng& rng) {
  if (p.a != 0.0)
    throw std::invalid_argument("cir exact sampler: critical case only");
  ModelParams crit = p;
  crit.c = 0.0;
  double base = x > 0.0 ? sample_feller_exact(x, t, crit, rng) : 0.0;
  return base + rng.gamma(2.0, 0.5 * p.b * t);
}

MassPath sample_cir_path_exact(double x, const ModelParams& p,
                               const std::vector<double>& grid, Rng& rng) {
  MassPath path;
  path.grid = grid;
  path.values.resize(grid.size());
  path.values[0] = x;
  double z = x;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    z = sample_cir_immigration_exact(z, grid[i] - grid[i - 1], p, rng);
    path.values[i] = z;
  }
  return path;
}

double sample_conditioned_entrance(double u, double R, const ModelParams& p,
                                   Rng& rng) {
  if (!(u > 0.0) || !(R > u))
    throw std::invalid_argument("conditioned entrance: 0 < u < R");
  double first = rng.exp_mean(0.5 * p.b * u);
  double second = rng.exp_mean(0.5 * p.b * u * (R - u) / R);
  return first + second;
}

}  // namespace genlab
