#include <doctest.h>

#include <cmath>
#include <vector>

#include "genlab/coalescent.hpp"
#include "genlab/forward_sim.hpp"
#include "genlab/spatial.hpp"
#include "genlab/stats.hpp"

using namespace genlab;

namespace {

SpatialParams desk(int sites, double cmig) {
  SpatialParams sp;
  sp.base = {1.0, 0.0, 0.0};
  sp.cmig = cmig;
  sp.sites = sites;
  sp.uniform_kernel = false;
  return sp;
}

}  // namespace

TEST_CASE("moment oracle matches the 2-site closed form") {
  // symmetric 2-site system from deterministic (1,1):
  //   v + w = 2 + b t,  v - w = (1 - e^{-4ct}) b/(4c)
  auto sp = desk(2, 1.0);
  std::vector<double> init = {1.0, 1.0};
  double t = 1.0;
  auto mo = site_moment_oracle(init, t, sp);
  double vw_sum = 2.0 + t;
  double vw_diff = (1.0 - std::exp(-4.0 * t)) / 4.0;
  CHECK(mo.mean[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(mo.second[0][0] + mo.second[0][1] ==
        doctest::Approx(vw_sum).epsilon(1e-9));
  CHECK(mo.second[0][0] - mo.second[0][1] ==
        doctest::Approx(vw_diff).epsilon(1e-9));
}

TEST_CASE("translation-invariant start keeps site means equal") {
  auto sp = desk(4, 1.0);
  std::vector<double> init = {1.0, 1.0, 1.0, 1.0};
  Rng rng(derive_seed(7, "sp.trans"));
  std::vector<stats::MomentAcc> acc(4);
  for (int i = 0; i < 3000; ++i) {
    auto mt = simulate_spatial_genealogy(60, init, 1.0, sp, rng);
    auto ms = mt.site_masses(4);
    for (int s = 0; s < 4; ++s) acc[s].push(ms[s]);
  }
  for (int s = 1; s < 4; ++s) {
    double z = stats::ci_compare(acc[0].mean(), acc[0].se(), acc[s].mean(),
                                 acc[s].se());
    CHECK(std::abs(z) < 3.5);
  }
}

TEST_CASE("cmig = 0: per-site masses are independent plain Feller") {
  auto sp = desk(2, 0.0);
  std::vector<double> init = {1.0, 1.0};
  Rng rng(derive_seed(7, "sp.nomig"));
  const std::size_t n = 2000;
  std::vector<double> site0(n), plain(n);
  ModelParams p = sp.base;
  stats::MomentAcc crossprod;
  for (std::size_t i = 0; i < n; ++i) {
    auto mt = simulate_spatial_genealogy(100, init, 1.0, sp, rng);
    auto ms = mt.site_masses(2);
    site0[i] = ms[0];
    crossprod.push(ms[0] * ms[1]);
    plain[i] = simulate_gw_genealogy(100, 1.0, 1.0, p, rng).total_mass();
  }
  CHECK(stats::ks_test_2s(site0, plain).p_value > 0.01);
  // independence: E[y0 y1] = E[y0] E[y1] = 1
  CHECK(std::abs(crossprod.mean() - 1.0) < 3.0 * crossprod.se());
}

TEST_CASE("site-mass covariance matches the dual and the oracle") {
  auto sp = desk(2, 1.0);
  std::vector<double> init = {1.0, 1.0};
  double t = 1.0;
  Rng rng(derive_seed(7, "sp.cov"));
  auto oracle = site_moment_oracle(init, t, sp);
  // forward particles
  stats::MomentAcc m00, m01;
  for (int i = 0; i < 4000; ++i) {
    auto mt = simulate_spatial_genealogy(100, init, t, sp, rng);
    auto ms = mt.site_masses(2);
    m00.push(0.5 * (ms[0] * ms[0] + ms[1] * ms[1]));
    m01.push(ms[0] * ms[1]);
  }
  CHECK(std::abs(m00.mean() - oracle.second[0][0]) < 3.0 * m00.se());
  CHECK(std::abs(m01.mean() - oracle.second[0][1]) < 3.0 * m01.se());
  // FK dual
  SpatialDualConfig cfg{2, sp.cmig, false};
  auto d00 = spatial_dual_moment(init, {0, 0}, t, sp.base, cfg, 30000, rng);
  auto d01 = spatial_dual_moment(init, {0, 1}, t, sp.base, cfg, 30000, rng);
  CHECK(std::abs(d00.value - oracle.second[0][0]) < 3.0 * d00.std_error);
  CHECK(std::abs(d01.value - oracle.second[0][1]) < 3.0 * d01.std_error);
}

TEST_CASE("spatial polynomial estimate: reductions and site indicators") {
  auto sp = desk(2, 1.0);
  std::vector<double> init = {1.5, 0.5};
  Rng rng(derive_seed(7, "sp.poly"));
  auto mt = simulate_spatial_genealogy(80, init, 0.5, sp, rng);
  auto ones = [](const DistanceMatrix&) { return 1.0; };
  // g == 1 reduces to the unmarked polynomial (here: total mass)
  auto est = spatial_polynomial_estimate(
      mt, 1, ones, [](const std::vector<int>&) { return 1.0; }, 1000, rng);
  CHECK(est.value == doctest::Approx(mt.base.total_mass()));
  // g = indicator of site 0: mass at site 0
  auto at0 = spatial_polynomial_estimate(
      mt, 1, ones,
      [](const std::vector<int>& s) { return s[0] == 0 ? 1.0 : 0.0; }, 1000,
      rng);
  CHECK(at0.value == doctest::Approx(mt.site_masses(2)[0]));
}

TEST_CASE("degree-2 marked polynomial matches the dual oracle on Z_2") {
  auto sp = desk(2, 1.0);
  std::vector<double> init = {1.0, 1.0};
  double t = 1.0;
  Rng rng(derive_seed(7, "sp.deg2"));
  auto oracle = site_moment_oracle(init, t, sp);
  stats::MomentAcc acc;
  auto ones = [](const DistanceMatrix&) { return 1.0; };
  auto g00 = [](const std::vector<int>& s) {
    return (s[0] == 0 && s[1] == 0) ? 1.0 : 0.0;
  };
  for (int i = 0; i < 4000; ++i) {
    auto mt = simulate_spatial_genealogy(100, init, t, sp, rng);
    acc.push(spatial_polynomial_estimate(mt, 2, ones, g00, 8, rng).value);
  }
  CHECK(std::abs(acc.mean() - oracle.second[0][0]) < 3.0 * acc.se());
}

TEST_CASE("marks are exchangeable under group translation") {
  // uniform start on Z_4: the law of (site mass vector) is invariant under
  // rotation; check the lag-1 products at all base sites agree
  auto sp = desk(4, 0.7);
  std::vector<double> init = {1.0, 1.0, 1.0, 1.0};
  Rng rng(derive_seed(7, "sp.exch"));
  std::vector<stats::MomentAcc> lag1(4);
  for (int i = 0; i < 4000; ++i) {
    auto mt = simulate_spatial_genealogy(60, init, 1.0, sp, rng);
    auto ms = mt.site_masses(4);
    for (int s = 0; s < 4; ++s) lag1[s].push(ms[s] * ms[(s + 1) % 4]);
  }
  for (int s = 1; s < 4; ++s) {
    double z = stats::ci_compare(lag1[0].mean(), lag1[0].se(), lag1[s].mean(),
                                 lag1[s].se());
    CHECK(std::abs(z) < 3.5);
  }
}

TEST_CASE("every positive-mass leaf carries a mark") {
  auto sp = desk(3, 1.0);
  std::vector<double> init = {1.0, 0.5, 0.25};
  Rng rng(derive_seed(7, "sp.marks"));
  for (int i = 0; i < 20; ++i) {
    auto mt = simulate_spatial_genealogy(50, init, 0.7, sp, rng);
    CHECK(mt.marks.size() == mt.base.leaf_count());
    for (int m : mt.marks) CHECK((m >= 0 && m < 3));
  }
}
