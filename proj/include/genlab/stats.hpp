#ifndef GENLAB_STATS_HPP
#define GENLAB_STATS_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace genlab::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

// Regularized incomplete gamma functions (lower P, upper Q).
double gamma_p(double a, double x);
double gamma_q(double a, double x);
double chi_square_sf(double stat, double df);

// Reference distribution for one-sample KS tests. cdf must be the
// right-continuous distribution function; cdf_left(x) = F(x-) defaults to
// cdf and only needs overriding when the law has atoms (for us: mass at 0).
struct RefCdf {
  std::function<double(double)> cdf;
  std::function<double(double)> cdf_left;  // optional

  double left(double x) const { return cdf_left ? cdf_left(x) : cdf(x); }
};

RefCdf exponential_cdf(double mean);
RefCdf gamma_cdf(double shape, double scale);
// Law with P({0}) = atom and conditional law `positive` on (0, inf).
RefCdf atom_at_zero_mixture(double atom, RefCdf positive);

// One-sample Kolmogorov-Smirnov test; asymptotic p-value (intended for
// n >= 100). Atoms in the reference law make the p-value conservative.
TestResult ks_test(std::vector<double> samples, const RefCdf& ref);

// Two-sample Kolmogorov-Smirnov test with asymptotic p-value.
TestResult ks_test_2s(std::vector<double> a, std::vector<double> b);

// Chi-square goodness of fit. Cells with expected count < min_expected are
// pooled with their right neighbour (last cell pools leftwards). probs must
// sum to <= 1; any remainder is treated as an extra overflow cell.
TestResult chisq_test(const std::vector<long long>& counts,
                      const std::vector<double>& probs,
                      double min_expected = 5.0);

// Two-sample chi-square homogeneity test on shared integer-valued outcomes.
TestResult chisq_test_2s(const std::vector<long long>& counts_a,
                         const std::vector<long long>& counts_b,
                         double min_expected = 5.0);

// z-score for the difference of two independent estimates.
double ci_compare(double est_a, double se_a, double est_b, double se_b);

// Two-sample Cramer-von Mises statistic (diagnostic, no p-value).
double cvm_distance_2s(std::vector<double> a, std::vector<double> b);

// Mergeable first/second moment accumulator. The harness merges batches in
// replicate-index order, which keeps aggregation deterministic.
struct MomentAcc {
  long long n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void push(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const MomentAcc& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
  double var() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sum_sq - static_cast<double>(n) * m * m) /
               static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double se() const;
};

// Mean and standard error of a sample.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_se(const std::vector<double>& xs);

}  // namespace genlab::stats

#endif  // GENLAB_STATS_HPP
