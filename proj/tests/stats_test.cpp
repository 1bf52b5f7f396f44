#include <doctest.h>

#include <cmath>
#include <vector>

#include "genlab/rng.hpp"
#include "genlab/stats.hpp"

using namespace genlab;

TEST_CASE("kolmogorov survival function reference values") {
  // classic table values
  CHECK(stats::kolmogorov_q(1.2238) == doctest::Approx(0.10).epsilon(1e-3));
  CHECK(stats::kolmogorov_q(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(stats::kolmogorov_q(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(stats::kolmogorov_q(0.5) == doctest::Approx(0.9639).epsilon(1e-3));
}

TEST_CASE("incomplete gamma against known chi-square points") {
  // P(chi2_1 > 3.841) ~ 0.05, P(chi2_5 > 15.086) ~ 0.01
  CHECK(stats::chi_square_sf(3.841, 1) == doctest::Approx(0.05).epsilon(2e-3));
  CHECK(stats::chi_square_sf(15.086, 5) == doctest::Approx(0.01).epsilon(2e-2));
  CHECK(stats::gamma_p(2.0, 0.0) == 0.0);
  CHECK(stats::gamma_p(2.0, 1e3) == doctest::Approx(1.0));
}

TEST_CASE("ks test calibration: exponential samples accept, shifted reject") {
  int accepted = 0;
  for (unsigned seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(42, "ks.calib", seed));
    std::vector<double> xs(400);
    for (auto& x : xs) x = rng.exp_mean(2.0);
    auto r = stats::ks_test(xs, stats::exponential_cdf(2.0));
    if (r.p_value > 0.01) ++accepted;
  }
  CHECK(accepted >= 98);

  Rng rng(derive_seed(42, "ks.power"));
  std::vector<double> xs(10000);
  for (auto& x : xs) x = rng.exp_mean(2.0) + 0.2;
  auto r = stats::ks_test(xs, stats::exponential_cdf(2.0));
  CHECK(r.p_value < 1e-6);
}

TEST_CASE("two-sample ks calibration") {
  int accepted = 0;
  for (unsigned seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(43, "ks2.calib", seed));
    std::vector<double> a(300), b(500);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    auto r = stats::ks_test_2s(a, b);
    if (r.p_value > 0.01) ++accepted;
  }
  CHECK(accepted >= 97);
}

TEST_CASE("ks handles an atom at zero") {
  Rng rng(derive_seed(44, "ks.atom"));
  double atom = 0.3;
  std::vector<double> xs(5000);
  for (auto& x : xs) x = rng.uniform() < atom ? 0.0 : rng.exp_mean(1.0);
  auto ref = stats::atom_at_zero_mixture(atom, stats::exponential_cdf(1.0));
  auto r = stats::ks_test(xs, ref);
  CHECK(r.p_value > 0.01);
  // wrong atom mass must be rejected
  auto bad = stats::atom_at_zero_mixture(0.15, stats::exponential_cdf(1.0));
  CHECK(stats::ks_test(xs, bad).p_value < 1e-6);
}

TEST_CASE("chi-square pools small cells and calibrates") {
  Rng rng(derive_seed(45, "chi.calib"));
  // Poisson(3) counts
  double mu = 3.0;
  std::vector<long long> counts(30, 0);
  for (int i = 0; i < 20000; ++i) {
    auto k = static_cast<std::size_t>(rng.poisson(mu));
    if (k < counts.size()) ++counts[k];
  }
  std::vector<double> probs(counts.size());
  for (std::size_t k = 0; k < probs.size(); ++k)
    probs[k] = std::exp(-mu + static_cast<double>(k) * std::log(mu) -
                        std::lgamma(static_cast<double>(k) + 1.0));
  auto r = stats::chisq_test(counts, probs);
  CHECK(r.p_value > 0.001);

  // a shifted law must fail decisively
  std::vector<double> probs_bad(probs.size());
  double mu2 = 3.6;
  for (std::size_t k = 0; k < probs_bad.size(); ++k)
    probs_bad[k] = std::exp(-mu2 + static_cast<double>(k) * std::log(mu2) -
                            std::lgamma(static_cast<double>(k) + 1.0));
  CHECK(stats::chisq_test(counts, probs_bad).p_value < 1e-6);
}

TEST_CASE("ci_compare") {
  CHECK(stats::ci_compare(1.0, 0.1, 1.0, 0.1) == 0.0);
  CHECK(stats::ci_compare(1.0, 0.1, 0.0, 0.0) == doctest::Approx(10.0));
}

TEST_CASE("moment accumulator merge is associative on exact inputs") {
  // dyadic inputs make every partial sum exactly representable
  std::vector<double> xs;
  Rng rng(derive_seed(46, "acc"));
  for (int i = 0; i < 300; ++i)
    xs.push_back(static_cast<double>(rng.uniform_index(1 << 12)) / 1024.0);
  stats::MomentAcc a, b, c;
  for (int i = 0; i < 100; ++i) a.push(xs[i]);
  for (int i = 100; i < 200; ++i) b.push(xs[i]);
  for (int i = 200; i < 300; ++i) c.push(xs[i]);
  stats::MomentAcc left = a;
  left.merge(b);
  left.merge(c);
  stats::MomentAcc right_bc = b;
  right_bc.merge(c);
  stats::MomentAcc right = a;
  right.merge(right_bc);
  CHECK(left.sum == right.sum);
  CHECK(left.sum_sq == right.sum_sq);
  CHECK(left.n == right.n);
}
