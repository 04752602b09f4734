// NEON kernel sums, 2 doubles per lane. NEON is baseline on aarch64, so this
// TU is compiled (and the backend always offered) on that architecture only.
// Per-element arithmetic matches kernels_scalar.cpp; only the 2-way
// accumulator split differs.

#include "sindex/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace sindex::kern {
namespace detail {

namespace {

inline float64x2_t masked(uint64x2_t mask, float64x2_t v) {
  return vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(v)));
}

Sums sums_1d_neon(double t, const double* train_t, std::size_t m, double inv_ht) {
  const float64x2_t tv = vdupq_n_f64(t);
  const float64x2_t ih = vdupq_n_f64(inv_ht);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t acc0 = zero;
  float64x2_t acc1 = zero;

  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const float64x2_t u = vmulq_f64(vsubq_f64(tv, vld1q_f64(train_t + i)), ih);
    const float64x2_t q = vsubq_f64(one, vmulq_f64(u, u));
    const uint64x2_t mask = vcgtq_f64(q, zero);
    const float64x2_t q2 = vmulq_f64(q, q);
    acc0 = vaddq_f64(acc0, masked(mask, vmulq_f64(q2, q)));
    acc1 = vaddq_f64(acc1, masked(mask, vmulq_f64(u, q2)));
  }

  double s0 = vaddvq_f64(acc0);
  double s1 = vaddvq_f64(acc1);
  for (; i < m; ++i) {
    const double u = (t - train_t[i]) * inv_ht;
    const double q = 1.0 - u * u;
    if (q > 0.0) {
      const double q2 = q * q;
      s0 += q2 * q;
      s1 += u * q2;
    }
  }
  return {kTriweightNorm * s0, kTriweightDerivNorm * s1};
}

Sums sums_2d_neon(double t, double y, const double* train_t, const double* train_y,
                  std::size_t m, double inv_ht, double inv_hy) {
  const float64x2_t tv = vdupq_n_f64(t);
  const float64x2_t yv = vdupq_n_f64(y);
  const float64x2_t iht = vdupq_n_f64(inv_ht);
  const float64x2_t ihy = vdupq_n_f64(inv_hy);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  float64x2_t acc0 = zero;
  float64x2_t acc1 = zero;

  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const float64x2_t u = vmulq_f64(vsubq_f64(tv, vld1q_f64(train_t + i)), iht);
    const float64x2_t v = vmulq_f64(vsubq_f64(yv, vld1q_f64(train_y + i)), ihy);
    const float64x2_t qu = vsubq_f64(one, vmulq_f64(u, u));
    const float64x2_t qv = vsubq_f64(one, vmulq_f64(v, v));
    const uint64x2_t mask = vandq_u64(vcgtq_f64(qu, zero), vcgtq_f64(qv, zero));
    const float64x2_t qu2 = vmulq_f64(qu, qu);
    const float64x2_t wv = vmulq_f64(vmulq_f64(qv, qv), qv);
    acc0 = vaddq_f64(acc0, masked(mask, vmulq_f64(vmulq_f64(qu2, qu), wv)));
    acc1 = vaddq_f64(acc1, masked(mask, vmulq_f64(vmulq_f64(u, qu2), wv)));
  }

  double s0 = vaddvq_f64(acc0);
  double s1 = vaddvq_f64(acc1);
  for (; i < m; ++i) {
    const double u = (t - train_t[i]) * inv_ht;
    const double v = (y - train_y[i]) * inv_hy;
    const double qu = 1.0 - u * u;
    const double qv = 1.0 - v * v;
    if (qu > 0.0 && qv > 0.0) {
      const double qu2 = qu * qu;
      const double wv = qv * qv * qv;
      s0 += qu2 * qu * wv;
      s1 += u * qu2 * wv;
    }
  }
  return {kTriweightNorm * kTriweightNorm * s0, kTriweightDerivNorm * kTriweightNorm * s1};
}

}  // namespace

extern const Backend kNeonBackend;
const Backend kNeonBackend{"neon", sums_1d_neon, sums_2d_neon};

}  // namespace detail
}  // namespace sindex::kern

#endif  // __aarch64__
