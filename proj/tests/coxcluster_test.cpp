#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "genlab/coxcluster.hpp"
#include "genlab/stats.hpp"

using namespace genlab;

TEST_CASE("yule family: total mass is Exp(mean bh/2) at any cut") {
  ModelParams p{1.0, 0.0, 0.0};
  double h = 2.0;
  Rng rng(derive_seed(5, "cx.mass"));
  const std::size_t n = 20000;
  std::vector<double> m1(n), m2(n);
  for (auto& m : m1) m = sample_yule_family(h, p, 1e-3 * h, rng).total_mass();
  for (auto& m : m2) m = sample_yule_family_mass(h, p, 0.05 * h, rng);
  auto ref = stats::exponential_cdf(0.5 * p.b * h);
  CHECK(stats::ks_test(m1, ref).p_value > 0.01);
  CHECK(stats::ks_test(m2, ref).p_value > 0.01);
}

TEST_CASE("yule family: within-family ball counts are geometric") {
  ModelParams p{1.0, 0.0, 0.0};
  double h = 2.0, hp = 1.0;
  Rng rng(derive_seed(5, "cx.geo"));
  const std::size_t n = 12000;
  std::vector<long long> counts(64, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto fam = sample_yule_family(h, p, 1e-3 * h, rng);
    auto c = static_cast<std::size_t>(count_balls(fam, hp));
    if (c < counts.size()) ++counts[c];
  }
  std::vector<double> probs(counts.size(), 0.0);
  for (std::size_t k = 1; k < probs.size(); ++k)
    probs[k] = ballcount_pmf(h, hp, static_cast<long long>(k), p);
  CHECK(stats::chisq_test(counts, probs).p_value > 0.01);
  // success probability h'/h at k = 1
  CHECK(ballcount_pmf(h, hp, 1, p) == doctest::Approx(0.5));
}

TEST_CASE("yule family: cut refinement leaves the mass law stable") {
  ModelParams p{1.0, 0.0, 0.0};
  double h = 1.0;
  Rng rng(derive_seed(5, "cx.cut"));
  const std::size_t n = 20000;
  auto ks_at = [&](double cut) {
    std::vector<double> m(n);
    for (auto& x : m) x = sample_yule_family_mass(h, p, cut, rng);
    return stats::ks_test(m, stats::exponential_cdf(0.5 * p.b * h)).statistic;
  };
  double d1 = ks_at(1e-3 * h);
  double d2 = ks_at(5e-4 * h);
  CHECK(std::abs(d1 - d2) < 0.01);
}

TEST_CASE("non-critical yule family mass matches the transform mean") {
  ModelParams p{1.0, -0.6, 0.0};
  double h = 1.5;
  Rng rng(derive_seed(5, "cx.noncrit"));
  stats::MomentAcc acc;
  for (int i = 0; i < 20000; ++i)
    acc.push(sample_yule_family_mass(h, p, 1e-3 * h, rng));
  double target = yule_family_mass_mean(h, p);  // (b/2a)(e^{ah}-1)
  CHECK(std::abs(acc.mean() - target) < 3.0 * acc.se());
  // and the law is exponential with that mean
  std::vector<double> m(20000);
  for (auto& x : m) x = sample_yule_family_mass(h, p, 1e-3 * h, rng);
  CHECK(stats::ks_test(m, stats::exponential_cdf(target)).p_value > 0.01);
}

TEST_CASE("compose: h = t family count is Poisson(2 x0/(b t))") {
  ModelParams p{1.0, 0.0, 0.0};
  double x0 = 1.0, t = 2.0;
  Rng rng(derive_seed(5, "cx.compose"));
  stats::MomentAcc zero;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    auto comp = compose_cox_state_detail(x0, t, t, p, 0.02 * t, rng);
    zero.push(comp.family_count == 0 ? 1.0 : 0.0);
  }
  // P(N = 0) equals the extinction probability
  double target = std::exp(-2.0 * x0 / (p.b * t));
  CHECK(std::abs(zero.mean() - target) < 3.0 * zero.se());
}

TEST_CASE("compose total mass equals the exact transition in law") {
  ModelParams p{1.0, 0.0, 0.0};
  double x0 = 1.0, t = 2.0, h = 1.0;
  Rng rng(derive_seed(5, "cx.ks"));
  const std::size_t n = 8000;
  std::vector<double> comp(n), exact(n);
  for (std::size_t i = 0; i < n; ++i) {
    comp[i] = compose_cox_state_detail(x0, t, h, p, 0.01 * h, rng)
                  .tree.total_mass();
    exact[i] = sample_feller_exact(x0, t, p, rng);
  }
  CHECK(stats::ks_test_2s(comp, exact).p_value > 0.01);
}

TEST_CASE("pairwise distance-mass profile of the composition is b x s") {
  ModelParams p{1.0, 0.0, 0.0};
  double x0 = 1.0, t = 2.0, h = 1.0;
  Rng rng(derive_seed(5, "cx.prof"));
  stats::MomentAcc acc;
  double s = 0.5;  // below the composition depth h
  for (int i = 0; i < 6000; ++i) {
    auto comp = compose_cox_state(x0, t, h, p, rng);
    double pm = 0.0;
    for (double m : ball_masses(comp, s)) pm += m * m;
    acc.push(pm);
  }
  CHECK(std::abs(acc.mean() - p.b * x0 * s) < 3.0 * acc.se());
}

TEST_CASE("ballcount generating function: closed form and geometric series") {
  ModelParams p{1.0, 0.0, 0.0};
  double h = 2.0, hp = 1.0;
  CHECK(ballcount_generating_function(h, hp, 0.0, p) == doctest::Approx(0.0));
  CHECK(ballcount_generating_function(h, hp, 1.0, p) == 1.0);
  // g'(0) = P(Z = 1) = h'/h
  double dq = 1e-6;
  double gp0 = (ballcount_generating_function(h, hp, dq, p) -
                ballcount_generating_function(h, hp, 0.0, p)) /
               dq;
  CHECK(gp0 == doctest::Approx(0.5).epsilon(1e-4));
  // the u-route matches the geometric series route, both cases of a
  for (double a : {0.0, -0.4, 0.3}) {
    ModelParams pa{1.0, a, 0.0};
    for (double q : {0.1, 0.5, 0.9}) {
      double via_u = ballcount_generating_function(h, hp, q, pa);
      double series = 0.0;
      for (long long k = 1; k < 400; ++k)
        series += std::pow(q, static_cast<double>(k)) *
                  ballcount_pmf(h, hp, k, pa);
      CHECK(via_u == doctest::Approx(series).epsilon(1e-10));
    }
  }
}

TEST_CASE("cox levy density: unit first moment and decay rate") {
  ModelParams p{1.0, 0.0, 0.0};
  double t = 3.0, h = 1.0;
  // numeric quadrature of int y lambda(dy) = 1
  double acc = 0.0;
  const int n = 200000;
  double ymax = 60.0, dy = ymax / n;
  for (int i = 0; i < n; ++i) {
    double y = (i + 0.5) * dy;
    acc += y * cox_levy_density(y, t, h, p) * dy;
  }
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
  // exponential decay rate 2/((t-h) b)
  double y1 = 5.0, y2 = 6.0;
  double rate = std::log(cox_levy_density(y1, t, h, p) /
                         cox_levy_density(y2, t, h, p));
  CHECK(rate == doctest::Approx(2.0 / ((t - h) * p.b)).epsilon(1e-12));
}

TEST_CASE("two-level decomposition: balls in balls counts") {
  // given one 2t-ball, its 2h-ball count is Pois(2Y/(bh)) | >= 1 with
  // Y ~ Exp((t-h)b/2), which is geometric with parameter (t-h)/t
  ModelParams p{1.0, 0.0, 0.0};
  double t = 2.0, h = 1.0;
  Rng rng(derive_seed(5, "cx.twolevel"));
  std::vector<long long> counts(64, 0);
  const int n = 12000;
  for (int i = 0; i < n; ++i) {
    double y = rng.exp_mean(0.5 * (t - h) * p.b);
    long long c = rng.poisson(2.0 * y / (p.b * h));
    if (c >= 1 && c < static_cast<long long>(counts.size())) ++counts[c];
  }
  std::vector<double> probs(counts.size(), 0.0);
  for (std::size_t k = 1; k < probs.size(); ++k)
    probs[k] = ballcount_pmf(t, h, static_cast<long long>(k), p);
  // conditional on >= 1: renormalize by P(N >= 1) = h/t
  double pge1 = h / t;
  for (auto& q : probs) q *= 1.0;
  (void)pge1;
  auto r = stats::chisq_test(counts, probs);
  CHECK(r.p_value > 0.01);
}

TEST_CASE("excursion law: single-family composition equals the yule family") {
  ModelParams p{1.0, 0.0, 0.0};
  double t = 1.5;
  Rng rng(derive_seed(5, "cx.excur"));
  const std::size_t n = 6000;
  std::vector<double> one_fam, yule;
  std::vector<long long> cnt_fam(48, 0), cnt_yule(48, 0);
  double hp = 0.75;
  while (one_fam.size() < n) {
    auto comp = compose_cox_state_detail(1.0, t, t, p, 1e-3 * t, rng);
    if (comp.family_count != 1) continue;
    one_fam.push_back(comp.tree.total_mass());
    auto c = static_cast<std::size_t>(count_balls(comp.tree, hp));
    if (c < cnt_fam.size()) ++cnt_fam[c];
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto fam = sample_yule_family(t, p, 1e-3 * t, rng);
    yule.push_back(fam.total_mass());
    auto c = static_cast<std::size_t>(count_balls(fam, hp));
    if (c < cnt_yule.size()) ++cnt_yule[c];
  }
  CHECK(stats::ks_test_2s(one_fam, yule).p_value > 0.01);
  CHECK(stats::chisq_test_2s(cnt_fam, cnt_yule).p_value > 0.01);
}

TEST_CASE("rho_h does not depend on the horizon t") {
  // family-level statistics of compositions at t and t' share the family law
  ModelParams p{1.0, 0.0, 0.0};
  double h = 1.0;
  Rng rng(derive_seed(5, "cx.rho"));
  auto family_masses = [&](double t, std::size_t n) {
    std::vector<double> out;
    while (out.size() < n) {
      auto comp = compose_cox_state_detail(1.0, t, h, p, 1e-3 * h, rng);
      for (double m : ball_masses(comp.tree, h)) out.push_back(m);
    }
    return out;
  };
  auto f1 = family_masses(1.5, 6000);
  auto f2 = family_masses(3.0, 6000);
  CHECK(stats::ks_test_2s(f1, f2).p_value > 0.01);
}

TEST_CASE("parameter validation") {
  ModelParams p{1.0, 0.0, 0.0};
  Rng rng(derive_seed(5, "cx.err"));
  CHECK_THROWS_AS(sample_yule_family(1.0, p, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_yule_family(1.0, p, 2.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(compose_cox_state(1.0, 1.0, 2.0, p, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(ballcount_generating_function(1.0, 1.5, 0.5, p),
                  std::invalid_argument);
}
