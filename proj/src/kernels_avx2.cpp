// AVX2 variants of the dense kernels. Built with -mavx2 -mfma and reached
// only through the runtime dispatch in kernels.cpp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "genlab/detail/exp_log_core.hpp"
#include "genlab/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

namespace genlab::kernels {

namespace {

namespace d = detail;

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline __m256d exp_pd(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(d::kLog2E);
  const __m256d c1 = _mm256_set1_pd(d::kExpC1);
  const __m256d c2 = _mm256_set1_pd(d::kExpC2);
  __m256d n = _mm256_floor_pd(
      _mm256_add_pd(_mm256_mul_pd(log2e, x), _mm256_set1_pd(0.5)));
  __m256d r = _mm256_fnmadd_pd(n, c1, x);
  r = _mm256_fnmadd_pd(n, c2, r);
  __m256d r2 = _mm256_mul_pd(r, r);
  __m256d px = _mm256_set1_pd(d::kExpP[0]);
  px = _mm256_fmadd_pd(px, r2, _mm256_set1_pd(d::kExpP[1]));
  px = _mm256_fmadd_pd(px, r2, _mm256_set1_pd(d::kExpP[2]));
  px = _mm256_mul_pd(px, r);
  __m256d qx = _mm256_set1_pd(d::kExpQ[0]);
  qx = _mm256_fmadd_pd(qx, r2, _mm256_set1_pd(d::kExpQ[1]));
  qx = _mm256_fmadd_pd(qx, r2, _mm256_set1_pd(d::kExpQ[2]));
  qx = _mm256_fmadd_pd(qx, r2, _mm256_set1_pd(d::kExpQ[3]));
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  __m256d y = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));
  // scale by 2^n through the exponent field
  __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(ni);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  n64 = _mm256_slli_epi64(n64, 52);
  __m256d p2n = _mm256_castsi256_pd(n64);
  return _mm256_mul_pd(y, p2n);
}

inline __m256d log_pd(__m256d x) {
  const __m256i mant_mask = _mm256_set1_epi64x(0x800fffffffffffffll);
  const __m256i half_bits = _mm256_set1_epi64x(0x3fe0000000000000ll);
  __m256i bits = _mm256_castpd_si256(x);
  __m256i expo = _mm256_srli_epi64(bits, 52);
  expo = _mm256_and_si256(expo, _mm256_set1_epi64x(0x7ff));
  expo = _mm256_sub_epi64(expo, _mm256_set1_epi64x(1022));
  __m256i mbits =
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), half_bits);
  __m256d m = _mm256_castsi256_pd(mbits);
  // exponent as double: values are small integers, convert via packed i32
  __m256i lo32 = _mm256_shuffle_epi32(expo, 0x88);  // take low dwords
  __m128i packed = _mm_unpacklo_epi64(_mm256_castsi256_si128(lo32),
                                      _mm256_extracti128_si256(lo32, 1));
  __m256d e = _mm256_cvtepi32_pd(packed);

  __m256d below = _mm256_and_pd(
      _mm256_cmp_pd(m, _mm256_set1_pd(d::kSqrtHalf), _CMP_LT_OQ),
      _mm256_set1_pd(1.0));
  e = _mm256_sub_pd(e, below);
  m = _mm256_sub_pd(_mm256_fmadd_pd(below, m, m), _mm256_set1_pd(1.0));

  __m256d z = _mm256_mul_pd(m, m);
  __m256d p = _mm256_set1_pd(d::kLogP[0]);
  for (int i = 1; i < 6; ++i)
    p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(d::kLogP[i]));
  __m256d q = _mm256_add_pd(m, _mm256_set1_pd(d::kLogQ[0]));
  for (int i = 1; i < 5; ++i)
    q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(d::kLogQ[i]));
  __m256d y = _mm256_div_pd(_mm256_mul_pd(m, _mm256_mul_pd(z, p)), q);
  y = _mm256_fmadd_pd(e, _mm256_set1_pd(d::kLogC2), y);
  y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);
  y = _mm256_add_pd(y, m);
  y = _mm256_fmadd_pd(e, _mm256_set1_pd(d::kLogC1), y);
  return y;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

void mean_var_avx2(const double* x, std::size_t n, double* mean, double* var) {
  if (n == 0) {
    *mean = 0.0;
    *var = 0.0;
    return;
  }
  double m = sum_avx2(x, n) / static_cast<double>(n);
  __m256d mv = _mm256_set1_pd(m);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), mv);
    __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), mv);
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double ss = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    double dd = x[i] - m;
    ss += dd * dd;
  }
  *mean = m;
  *var = (n > 1) ? ss / static_cast<double>(n - 1) : 0.0;
}

void exp_neg_scale_avx2(const double* x, std::size_t n, double lambda,
                        double* out) {
  const __m256d neg_lambda = _mm256_set1_pd(-lambda);
  const __m256d lo = _mm256_set1_pd(d::kExpMin);
  const __m256d hi = _mm256_set1_pd(d::kExpMax);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_mul_pd(neg_lambda, _mm256_loadu_pd(x + i));
    a = _mm256_min_pd(_mm256_max_pd(a, lo), hi);
    _mm256_storeu_pd(out + i, exp_pd(a));
  }
  for (; i < n; ++i) {
    double a = std::min(std::max(-lambda * x[i], d::kExpMin), d::kExpMax);
    out[i] = d::exp_core(a);
  }
}

void neg_log_scale_avx2(const double* u, std::size_t n, double scale,
                        double* out) {
  const __m256d neg_scale = _mm256_set1_pd(-scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d l = log_pd(_mm256_loadu_pd(u + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(neg_scale, l));
  }
  for (; i < n; ++i) out[i] = -scale * d::log_core(u[i]);
}

double logsumexp_avx2(const double* x, std::size_t n) {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  __m256d mx4 = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) mx4 = _mm256_max_pd(mx4, _mm256_loadu_pd(x + i));
  double lane[4];
  _mm256_storeu_pd(lane, mx4);
  double mx = std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
  for (; i < n; ++i) mx = std::max(mx, x[i]);
  if (!std::isfinite(mx)) return mx;

  const __m256d mxv = _mm256_set1_pd(mx);
  const __m256d lo = _mm256_set1_pd(d::kExpMin);
  __m256d acc = _mm256_setzero_pd();
  i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_sub_pd(_mm256_loadu_pd(x + i), mxv);
    a = _mm256_max_pd(a, lo);
    acc = _mm256_add_pd(acc, exp_pd(a));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += d::exp_core(std::max(x[i] - mx, d::kExpMin));
  return mx + d::log_core(s);
}

void em_step_avx2(double* z, const double* gauss, std::size_t n, double c,
                  double a, double b, double dt, double sqrt_dt) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d cv = _mm256_set1_pd(c);
  const __m256d av = _mm256_set1_pd(a);
  const __m256d bv = _mm256_set1_pd(b);
  const __m256d dtv = _mm256_set1_pd(dt);
  const __m256d sdtv = _mm256_set1_pd(sqrt_dt);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d zi = _mm256_loadu_pd(z + i);
    __m256d zp = _mm256_max_pd(zi, zero);
    __m256d drift = _mm256_mul_pd(_mm256_fmadd_pd(av, zp, cv), dtv);
    __m256d vol = _mm256_mul_pd(_mm256_sqrt_pd(_mm256_mul_pd(bv, zp)), sdtv);
    __m256d g = _mm256_loadu_pd(gauss + i);
    __m256d zn = _mm256_add_pd(zi, _mm256_fmadd_pd(vol, g, drift));
    _mm256_storeu_pd(z + i, _mm256_max_pd(zn, zero));
  }
  for (; i < n; ++i) {
    double zp = std::max(z[i], 0.0);
    double zn = z[i] + (c + a * zp) * dt + std::sqrt(b * zp) * sqrt_dt * gauss[i];
    z[i] = std::max(zn, 0.0);
  }
}

const Ops kAvx2Ops = {
    "avx2",         sum_avx2,        mean_var_avx2, exp_neg_scale_avx2,
    neg_log_scale_avx2, logsumexp_avx2, em_step_avx2,
};

}  // namespace

const Ops& avx2_ops() { return kAvx2Ops; }

}  // namespace genlab::kernels

#else

namespace genlab::kernels {
const Ops& avx2_ops() { return scalar_ops(); }
}  // namespace genlab::kernels

#endif
