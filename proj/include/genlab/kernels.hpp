#ifndef GENLAB_KERNELS_HPP
#define GENLAB_KERNELS_HPP

#include <cstddef>
#include <string_view>

namespace genlab::kernels {

// Dense arithmetic inner loops used by the samplers and the statistics
// aggregation. Scalar reference implementations plus an AVX2 variant,
// selected once at startup. The two backends are equivalence-tested; the
// scalar path is the reference semantics.
struct Ops {
  const char* name;

  double (*sum)(const double* x, std::size_t n);

  // Sample mean and unbiased variance (n-1 denominator), two-pass.
  void (*mean_var)(const double* x, std::size_t n, double* mean, double* var);

  // out[i] = exp(-lambda * x[i]); empirical Laplace transforms.
  void (*exp_neg_scale)(const double* x, std::size_t n, double lambda,
                        double* out);

  // out[i] = -scale * log(u[i]); batches of exponential draws from uniforms.
  void (*neg_log_scale)(const double* u, std::size_t n, double scale,
                        double* out);

  // log(sum_i exp(x[i])), shifted by the max.
  double (*logsumexp)(const double* x, std::size_t n);

  // One Euler-Maruyama step for dZ = (c + a Z) dt + sqrt(b Z) dW across a
  // batch of paths. Full truncation: the coefficient functions see
  // max(z, 0) and the result is clamped at 0.
  //   z[i] <- max(z[i] + (c + a*zp)*dt + sqrt(b*zp)*sqrt_dt*g[i], 0),
  //   zp = max(z[i], 0).
  void (*em_step)(double* z, const double* gauss, std::size_t n, double c,
                  double a, double b, double dt, double sqrt_dt);
};

const Ops& scalar_ops();
bool avx2_available();
const Ops& avx2_ops();  // only valid if avx2_available()

// Resolved once per process: explicit set_backend() wins, then the
// GENLAB_KERNELS environment variable, then CPU detection.
const Ops& active();
void set_backend(std::string_view name);  // "scalar", "avx2" or "auto"
std::string_view backend_name();

}  // namespace genlab::kernels

#endif  // GENLAB_KERNELS_HPP
