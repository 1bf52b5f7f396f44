#ifndef GENLAB_DETAIL_EXP_LOG_CORE_HPP
#define GENLAB_DETAIL_EXP_LOG_CORE_HPP

#include <cmath>
#include <cstdint>

// Cephes-style exp/log cores shared by the scalar reference kernels and the
// AVX2 kernels, so that both backends evaluate the same polynomials in the
// same order.

namespace genlab::kernels::detail {

inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kExpC1 = 6.93145751953125e-1;
inline constexpr double kExpC2 = 1.42860682030941723212e-6;
inline constexpr double kExpMax = 709.0;
inline constexpr double kExpMin = -709.0;

inline constexpr double kExpP[3] = {
    1.26177193074810590878e-4,
    3.02994407707441961300e-2,
    9.99999999999999999910e-1,
};
inline constexpr double kExpQ[4] = {
    3.00198505138664455042e-6,
    2.52448340349684104192e-3,
    2.27265548208155028766e-1,
    2.00000000000000000005e0,
};

// exp(x) for x in [-709, 709]; caller clamps.
inline double exp_core(double x) {
  double n = std::floor(kLog2E * x + 0.5);
  double r = x - n * kExpC1;
  r -= n * kExpC2;
  double r2 = r * r;
  double px = r * ((kExpP[0] * r2 + kExpP[1]) * r2 + kExpP[2]);
  double qx = ((kExpQ[0] * r2 + kExpQ[1]) * r2 + kExpQ[2]) * r2 + kExpQ[3];
  double e = px / (qx - px);
  double y = 1.0 + 2.0 * e;
  // scale by 2^n via the exponent field
  std::int64_t ni = static_cast<std::int64_t>(n);
  std::uint64_t bits = static_cast<std::uint64_t>(ni + 1023) << 52;
  double p2n;
  static_assert(sizeof(double) == sizeof(std::uint64_t));
  __builtin_memcpy(&p2n, &bits, sizeof(double));
  return y * p2n;
}

inline constexpr double kSqrtHalf = 0.70710678118654752440;
inline constexpr double kLogC1 = 0.693359375;
inline constexpr double kLogC2 = -2.121944400546905827679e-4;

inline constexpr double kLogP[6] = {
    1.01875663804580931796e-4, 4.97494994976747001425e-1,
    4.70579119878881725854e0,  1.44989225341610930846e1,
    1.79368678507819816313e1,  7.70838733755885391666e0,
};
inline constexpr double kLogQ[5] = {
    1.12873587189167450590e1, 4.52279145837532221105e1,
    8.29875266912776603211e1, 7.11544750618563894466e1,
    2.31251620126765340583e1,
};

// log(x) for finite x > 0.
inline double log_core(double x) {
  std::uint64_t bits;
  __builtin_memcpy(&bits, &x, sizeof(double));
  std::int64_t e = static_cast<std::int64_t>((bits >> 52) & 0x7ff) - 1022;
  bits = (bits & 0x800fffffffffffffull) | 0x3fe0000000000000ull;
  double m;  // in [0.5, 1)
  __builtin_memcpy(&m, &bits, sizeof(double));
  double below = (m < kSqrtHalf) ? 1.0 : 0.0;
  e -= static_cast<std::int64_t>(below);
  m = m + below * m - 1.0;  // 2m-1 or m-1
  double z = m * m;
  double p = kLogP[0];
  for (int i = 1; i < 6; ++i) p = p * m + kLogP[i];
  double q = m + kLogQ[0];
  for (int i = 1; i < 5; ++i) q = q * m + kLogQ[i];
  double y = m * (z * p / q);
  double ed = static_cast<double>(e);
  y += ed * kLogC2;
  y -= 0.5 * z;
  y += m;
  y += ed * kLogC1;
  return y;
}

}  // namespace genlab::kernels::detail

#endif  // GENLAB_DETAIL_EXP_LOG_CORE_HPP
