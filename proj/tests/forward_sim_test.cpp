#include <doctest.h>

#include <cmath>
#include <vector>

#include "genlab/coalescent.hpp"
#include "genlab/forward_sim.hpp"
#include "genlab/stats.hpp"

using namespace genlab;

TEST_CASE("GW genealogy at t = 0+ is a star of initial particles") {
  ModelParams p{1.0, 0.0, 0.0};
  Rng rng(derive_seed(3, "fs.star"));
  auto tree = simulate_gw_genealogy(100, 1.0, 1e-9, p, rng);
  CHECK(tree.leaf_count() == 100);
  CHECK(tree.total_mass() == doctest::Approx(1.0));
  // all pairwise distances ~ 2t ~ 0
  CHECK(tree.distance(0, 1) <= 2e-9);
}

TEST_CASE("GW total mass converges in law to the exact Feller transition") {
  ModelParams p{1.0, 0.0, 0.0};
  double x = 1.0, t = 1.0;
  double prev_stat = 1.0;
  for (std::size_t N : {50, 200, 800}) {
    std::size_t n = N == 50 ? 2000 : (N == 200 ? 1000 : 400);
    Rng rng(derive_seed(3, "fs.mass", N));
    std::vector<double> gw(n), exact(n);
    for (std::size_t i = 0; i < n; ++i) {
      gw[i] = simulate_gw_genealogy(N, x, t, p, rng).total_mass();
      exact[i] = sample_feller_exact(x, t, p, rng);
    }
    auto ks = stats::ks_test_2s(gw, exact);
    if (N == 800) CHECK(ks.p_value > 0.01);
    if (N == 50) prev_stat = ks.statistic;
    if (N == 800) CHECK(ks.statistic <= prev_stat + 0.02);
  }
}

TEST_CASE("GW pair mass profile matches the FK-dual closed form b*x*s") {
  ModelParams p{1.0, 0.0, 0.0};
  double x = 1.0, t = 1.0;
  Rng rng(derive_seed(3, "fs.pair"));
  const std::size_t n = 600;
  const double svals[3] = {0.25, 0.5, 1.0};
  stats::MomentAcc acc[3];
  for (std::size_t i = 0; i < n; ++i) {
    auto tree = simulate_gw_genealogy(400, x, t, p, rng);
    for (int k = 0; k < 3; ++k) acc[k].push(pair_mass_below(tree, svals[k]));
  }
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(acc[k].mean() - p.b * x * svals[k]) < 3.0 * acc[k].se());
}

TEST_CASE("branching property: polynomial additivity over joined clans") {
  // E[Phi_t(U_t)] from u1 u^t u2 initial state is the sum of the clan values
  ModelParams p{1.0, 0.0, 0.0};
  double t = 0.5;
  Dendrogram u1 = Dendrogram::point_mass(0.7);
  Dendrogram u2 = Dendrogram::point_mass(1.1);
  Dendrogram joined = concatenate_h(u1, u2, t);

  Polynomial tr{2, [](const DistanceMatrix& m) { return m.at(0, 1); },
                t};  // truncated at depth t
  const std::size_t n = 1500;
  std::size_t N = 150;
  stats::MomentAcc both, one, two;
  Rng rng(derive_seed(3, "fs.branch"));
  for (std::size_t i = 0; i < n; ++i) {
    auto tj = simulate_gw_genealogy_from(N, joined, t, p, rng);
    auto t1 = simulate_gw_genealogy_from(N, u1, t, p, rng);
    auto t2 = simulate_gw_genealogy_from(N, u2, t, p, rng);
    Rng prng(derive_seed(9, "fs.branch.eval", i));
    both.push(evaluate_polynomial(tj, tr, 64, prng, 0).value);
    one.push(evaluate_polynomial(t1, tr, 64, prng, 0).value);
    two.push(evaluate_polynomial(t2, tr, 64, prng, 0).value);
  }
  double z = stats::ci_compare(both.mean(), both.se(), one.mean() + two.mean(),
                               std::sqrt(one.se() * one.se() +
                                         two.se() * two.se()));
  CHECK(std::abs(z) < 3.0);
}

TEST_CASE("immigration keeps the population alive and adds ct to the mean") {
  ModelParams p{1.0, 0.0, 0.5};
  Rng rng(derive_seed(3, "fs.immig"));
  const std::size_t n = 1500;
  double x0 = 0.5, t = 2.0;
  stats::MomentAcc mass, alive;
  for (std::size_t i = 0; i < n; ++i) {
    auto tree = simulate_immigration_genealogy(100, t, p, rng,
                                               ImmigrantAttach::root, x0);
    mass.push(tree.total_mass());
    alive.push(tree.is_null() ? 0.0 : 1.0);
  }
  CHECK(std::abs(mass.mean() - (x0 + p.c * t)) < 3.0 * mass.se());
  CHECK(alive.mean() > 0.9);  // survival probability -> 1 with immigration
}

TEST_CASE("moran with constant path: pair coalescence is Exp(mean m/b)") {
  ModelParams p{1.0, 0.0, 0.0};
  double m = 2.0, t = 3.0;
  MassPath path;
  path.grid = uniform_grid(0.0, t, 64);
  path.values.assign(path.grid.size(), m);
  Rng rng(derive_seed(3, "fs.moran"));
  const std::size_t n = 4000;
  std::vector<double> taus(n);
  for (auto& tau : taus) {
    auto tree = simulate_moran_given_mass(path, 8, p, rng);
    CHECK(tree.total_mass() == doctest::Approx(m));
    std::size_t a = rng.uniform_index(8);
    std::size_t b = rng.uniform_index(7);
    if (b >= a) ++b;
    tau = 0.5 * tree.distance(a, b);  // backward coalescence time
  }
  // truncated exponential with atom at t
  double rate = p.b / m;
  auto ref = stats::RefCdf{
      [rate, t](double x) {
        if (x < 0.0) return 0.0;
        if (x >= t) return 1.0;
        return -std::expm1(-rate * x);
      },
      [rate, t](double x) {
        if (x <= 0.0) return 0.0;
        if (x > t) return 1.0;
        return -std::expm1(-rate * x);
      }};
  auto ks = stats::ks_test(taus, ref);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("moran with exploding mass gives a star; null path gives null tree") {
  ModelParams p{1.0, 0.0, 0.0};
  MassPath path;
  path.grid = uniform_grid(0.0, 1.0, 16);
  path.values.assign(path.grid.size(), 1e12);
  Rng rng(derive_seed(3, "fs.star2"));
  auto tree = simulate_moran_given_mass(path, 6, p, rng);
  CHECK(tree.leaf_count() == 6);
  CHECK(tree.distance(0, 5) == doctest::Approx(2.0));

  MassPath dead;
  dead.grid = uniform_grid(0.0, 1.0, 16);
  dead.values.assign(dead.grid.size(), 0.0);
  dead.values[0] = 1.0;
  CHECK(simulate_moran_given_mass(dead, 6, p, rng).is_null());
}

TEST_CASE("mixing moran over exact mass paths reproduces GW pair statistics") {
  ModelParams p{1.0, 0.0, 0.0};
  double x = 1.0, t = 1.0;
  Rng rng(derive_seed(3, "fs.mix"));
  const std::size_t n = 3000;
  double s = 0.5;
  stats::MomentAcc moran_prof;
  for (std::size_t i = 0; i < n; ++i) {
    auto path = sample_path_exact(x, p, uniform_grid(0.0, t, 64), rng);
    auto tree = simulate_moran_given_mass(path, 10, p, rng);
    moran_prof.push(pair_mass_below_ideal(tree, s));
  }
  // the FK dual closed form for the same statistic
  CHECK(std::abs(moran_prof.mean() - p.b * x * s) < 3.5 * moran_prof.se());
}

TEST_CASE("exchangeability: relabeling leaves distance statistics invariant") {
  ModelParams p{1.0, 0.0, 0.0};
  Rng rng(derive_seed(3, "fs.exch"));
  MassPath path;
  path.grid = uniform_grid(0.0, 1.0, 32);
  path.values.assign(path.grid.size(), 1.0);
  stats::MomentAcc d01, d37;
  for (int i = 0; i < 3000; ++i) {
    auto tree = simulate_moran_given_mass(path, 8, p, rng);
    std::size_t slot[8];
    for (std::size_t l = 0; l < tree.leaf_count(); ++l)
      slot[tree.node(tree.leaves()[l]).tag] = l;
    d01.push(tree.distance(slot[0], slot[1]));
    d37.push(tree.distance(slot[3], slot[7]));
  }
  CHECK(std::abs(stats::ci_compare(d01.mean(), d01.se(), d37.mean(),
                                   d37.se())) < 3.0);
}
