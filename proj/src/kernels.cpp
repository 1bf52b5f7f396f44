#include "genlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "genlab/detail/exp_log_core.hpp"

namespace genlab::kernels {

namespace {

using detail::exp_core;
using detail::kExpMax;
using detail::kExpMin;
using detail::log_core;

double sum_scalar(const double* x, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += x[i];
    acc1 += x[i + 1];
    acc2 += x[i + 2];
    acc3 += x[i + 3];
  }
  double acc = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) acc += x[i];
  return acc;
}

void mean_var_scalar(const double* x, std::size_t n, double* mean,
                     double* var) {
  if (n == 0) {
    *mean = 0.0;
    *var = 0.0;
    return;
  }
  double m = sum_scalar(x, n) / static_cast<double>(n);
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double d0 = x[i] - m, d1 = x[i + 1] - m, d2 = x[i + 2] - m,
           d3 = x[i + 3] - m;
    acc0 += d0 * d0;
    acc1 += d1 * d1;
    acc2 += d2 * d2;
    acc3 += d3 * d3;
  }
  double ss = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) {
    double d = x[i] - m;
    ss += d * d;
  }
  *mean = m;
  *var = (n > 1) ? ss / static_cast<double>(n - 1) : 0.0;
}

void exp_neg_scale_scalar(const double* x, std::size_t n, double lambda,
                          double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double a = -lambda * x[i];
    a = std::min(std::max(a, kExpMin), kExpMax);
    out[i] = exp_core(a);
  }
}

void neg_log_scale_scalar(const double* u, std::size_t n, double scale,
                          double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = -scale * log_core(u[i]);
}

double logsumexp_scalar(const double* x, std::size_t n) {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::max(x[i] - mx, kExpMin);
    acc += exp_core(a);
  }
  return mx + log_core(acc);
}

void em_step_scalar(double* z, const double* gauss, std::size_t n, double c,
                    double a, double b, double dt, double sqrt_dt) {
  for (std::size_t i = 0; i < n; ++i) {
    double zp = std::max(z[i], 0.0);
    double znew = z[i] + (c + a * zp) * dt + std::sqrt(b * zp) * sqrt_dt * gauss[i];
    z[i] = std::max(znew, 0.0);
  }
}

const Ops kScalarOps = {
    "scalar",         sum_scalar,        mean_var_scalar,
    exp_neg_scale_scalar, neg_log_scale_scalar, logsumexp_scalar,
    em_step_scalar,
};

const Ops* g_active = nullptr;

const Ops* resolve_auto() {
  if (avx2_available()) return &avx2_ops();
  return &kScalarOps;
}

const Ops* resolve_from_env() {
  const char* env = std::getenv("GENLAB_KERNELS");
  if (env == nullptr) return resolve_auto();
  std::string name(env);
  if (name == "scalar") return &kScalarOps;
  if (name == "avx2" && avx2_available()) return &avx2_ops();
  return resolve_auto();
}

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const Ops& active() {
  if (g_active == nullptr) g_active = resolve_from_env();
  return *g_active;
}

void set_backend(std::string_view name) {
  if (name == "scalar") {
    g_active = &kScalarOps;
  } else if (name == "avx2") {
    if (!avx2_available())
      throw std::runtime_error("avx2 kernels not supported on this host");
    g_active = &avx2_ops();
  } else if (name == "auto" || name.empty()) {
    g_active = resolve_from_env();
  } else {
    throw std::runtime_error("unknown kernel backend: " + std::string(name));
  }
}

std::string_view backend_name() { return active().name; }

}  // namespace genlab::kernels
