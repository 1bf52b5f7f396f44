#include "genlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "genlab/kernels.hpp"

namespace genlab::stats {

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi theta form, accurate for small lambda.
    double y = std::exp(-std::numbers::pi * std::numbers::pi /
                        (8.0 * lambda * lambda));
    double p = std::sqrt(2.0 * std::numbers::pi) / lambda *
               (y + std::pow(y, 9) + std::pow(y, 25) + std::pow(y, 49));
    return 1.0 - p;
  }
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                  std::exp(-2.0 * k * k * lambda * lambda);
    q += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double n_eff) {
  double sq = std::sqrt(n_eff);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

double chi_square_sf(double stat, double df) {
  return gamma_q(df / 2.0, stat / 2.0);
}

RefCdf exponential_cdf(double mean) {
  return RefCdf{[mean](double x) {
                  return x <= 0.0 ? 0.0 : -std::expm1(-x / mean);
                },
                nullptr};
}

RefCdf gamma_cdf(double shape, double scale) {
  return RefCdf{[shape, scale](double x) {
                  return x <= 0.0 ? 0.0 : gamma_p(shape, x / scale);
                },
                nullptr};
}

RefCdf atom_at_zero_mixture(double atom, RefCdf positive) {
  auto pos_cdf = positive.cdf;
  return RefCdf{
      [atom, pos_cdf](double x) {
        if (x < 0.0) return 0.0;
        return atom + (1.0 - atom) * pos_cdf(x);
      },
      [atom, pos_cdf](double x) {
        if (x <= 0.0) return 0.0;
        return atom + (1.0 - atom) * pos_cdf(x);
      }};
}

TestResult ks_test(std::vector<double> samples, const RefCdf& ref) {
  if (samples.size() < 2) throw std::invalid_argument("ks_test: need samples");
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double d = 0.0;
  // group ties: at a distinct value v the empirical cdf jumps from
  // c_lo/n to c_hi/n while F jumps from F(v-) to F(v)
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    double v = samples[i];
    double c_lo = static_cast<double>(i) / n;
    double c_hi = static_cast<double>(j) / n;
    d = std::max(d, std::abs(c_hi - ref.cdf(v)));
    d = std::max(d, std::abs(ref.left(v) - c_lo));
    i = j;
  }
  return {d, ks_p_value(d, n)};
}

TestResult ks_test_2s(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("ks_test_2s: need samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  double n_eff = na * nb / (na + nb);
  return {d, ks_p_value(d, n_eff)};
}

namespace {

// Pool cells with small expectation into their right neighbour.
void pool_cells(std::vector<double>& expected, std::vector<double>& observed,
                double min_expected) {
  std::vector<double> e_out, o_out;
  double e_acc = 0.0, o_acc = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    e_acc += expected[i];
    o_acc += observed[i];
    if (e_acc >= min_expected) {
      e_out.push_back(e_acc);
      o_out.push_back(o_acc);
      e_acc = 0.0;
      o_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (!e_out.empty()) {
      e_out.back() += e_acc;
      o_out.back() += o_acc;
    } else {
      e_out.push_back(e_acc);
      o_out.push_back(o_acc);
    }
  }
  expected = std::move(e_out);
  observed = std::move(o_out);
}

}  // namespace

TestResult chisq_test(const std::vector<long long>& counts,
                      const std::vector<double>& probs, double min_expected) {
  if (counts.size() != probs.size())
    throw std::invalid_argument("chisq_test: size mismatch");
  long long total = 0;
  for (long long c : counts) total += c;
  if (total <= 0) throw std::invalid_argument("chisq_test: empty counts");

  double p_sum = 0.0;
  for (double p : probs) p_sum += p;

  std::vector<double> expected, observed;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    expected.push_back(probs[i] * static_cast<double>(total));
    observed.push_back(static_cast<double>(counts[i]));
  }
  if (p_sum < 1.0 - 1e-12) {
    // overflow cell for the unlisted tail (observed counts must be in-range)
    expected.push_back((1.0 - p_sum) * static_cast<double>(total));
    observed.push_back(0.0);
  }
  pool_cells(expected, observed, min_expected);
  if (expected.size() < 2) return {0.0, 1.0};

  double stat = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    double diff = observed[i] - expected[i];
    stat += diff * diff / expected[i];
  }
  double df = static_cast<double>(expected.size() - 1);
  return {stat, chi_square_sf(stat, df)};
}

TestResult chisq_test_2s(const std::vector<long long>& counts_a,
                         const std::vector<long long>& counts_b,
                         double min_expected) {
  if (counts_a.size() != counts_b.size())
    throw std::invalid_argument("chisq_test_2s: size mismatch");
  std::size_t k = counts_a.size();
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    na += static_cast<double>(counts_a[i]);
    nb += static_cast<double>(counts_b[i]);
  }
  if (na <= 0.0 || nb <= 0.0)
    throw std::invalid_argument("chisq_test_2s: empty counts");

  // Pool on pooled expectations, then compute the homogeneity statistic.
  std::vector<double> ta, tb;
  double aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    aa += static_cast<double>(counts_a[i]);
    bb += static_cast<double>(counts_b[i]);
    double pooled = (aa + bb) * std::min(na, nb) / (na + nb);
    if (pooled >= min_expected) {
      ta.push_back(aa);
      tb.push_back(bb);
      aa = bb = 0.0;
    }
  }
  if (aa > 0.0 || bb > 0.0) {
    if (!ta.empty()) {
      ta.back() += aa;
      tb.back() += bb;
    } else {
      ta.push_back(aa);
      tb.push_back(bb);
    }
  }
  if (ta.size() < 2) return {0.0, 1.0};
  double stat = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    double tot = ta[i] + tb[i];
    double exp_a = tot * na / (na + nb);
    double exp_b = tot * nb / (na + nb);
    double da = ta[i] - exp_a;
    double db = tb[i] - exp_b;
    stat += da * da / exp_a + db * db / exp_b;
  }
  double df = static_cast<double>(ta.size() - 1);
  return {stat, chi_square_sf(stat, df)};
}

double ci_compare(double est_a, double se_a, double est_b, double se_b) {
  double denom = std::sqrt(se_a * se_a + se_b * se_b);
  if (denom == 0.0) return est_a == est_b ? 0.0 : INFINITY;
  return (est_a - est_b) / denom;
}

double cvm_distance_2s(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> all;
  all.reserve(a.size() + b.size());
  all.insert(all.end(), a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  double acc = 0.0;
  for (double x : all) {
    double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) -
                                    a.begin()) /
                na;
    double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) -
                                    b.begin()) /
                nb;
    acc += (fa - fb) * (fa - fb);
  }
  return acc * na * nb / ((na + nb) * (na + nb));
}

double MomentAcc::se() const {
  return n > 0 ? std::sqrt(var() / static_cast<double>(n)) : 0.0;
}

MeanSe mean_se(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double mean = 0.0, var = 0.0;
  kernels::active().mean_var(xs.data(), xs.size(), &mean, &var);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace genlab::stats
