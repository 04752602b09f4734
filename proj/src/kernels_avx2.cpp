// AVX2 kernel sums, 4 doubles per lane. Compiled with -mavx2 in its own
// translation unit; only entered when the dispatcher has verified CPU
// support. Per-element arithmetic matches kernels_scalar.cpp exactly (no
// FMA contractions), so results differ from scalar only by the 4-way
// accumulator split.

#include "sindex/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace sindex::kern {
namespace detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

Sums sums_1d_avx2(double t, const double* train_t, std::size_t m, double inv_ht) {
  const __m256d tv = _mm256_set1_pd(t);
  const __m256d ih = _mm256_set1_pd(inv_ht);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc0 = zero;
  __m256d acc1 = zero;

  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d u = _mm256_mul_pd(_mm256_sub_pd(tv, _mm256_loadu_pd(train_t + i)), ih);
    const __m256d q = _mm256_sub_pd(one, _mm256_mul_pd(u, u));
    const __m256d mask = _mm256_cmp_pd(q, zero, _CMP_GT_OQ);
    const __m256d q2 = _mm256_mul_pd(q, q);
    acc0 = _mm256_add_pd(acc0, _mm256_and_pd(_mm256_mul_pd(q2, q), mask));
    acc1 = _mm256_add_pd(acc1, _mm256_and_pd(_mm256_mul_pd(u, q2), mask));
  }

  double s0 = hsum(acc0);
  double s1 = hsum(acc1);
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

Sums sums_2d_avx2(double t, double y, const double* train_t, const double* train_y,
                  std::size_t m, double inv_ht, double inv_hy) {
  const __m256d tv = _mm256_set1_pd(t);
  const __m256d yv = _mm256_set1_pd(y);
  const __m256d iht = _mm256_set1_pd(inv_ht);
  const __m256d ihy = _mm256_set1_pd(inv_hy);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc0 = zero;
  __m256d acc1 = zero;

  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d u = _mm256_mul_pd(_mm256_sub_pd(tv, _mm256_loadu_pd(train_t + i)), iht);
    const __m256d v = _mm256_mul_pd(_mm256_sub_pd(yv, _mm256_loadu_pd(train_y + i)), ihy);
    const __m256d qu = _mm256_sub_pd(one, _mm256_mul_pd(u, u));
    const __m256d qv = _mm256_sub_pd(one, _mm256_mul_pd(v, v));
    const __m256d mask = _mm256_and_pd(_mm256_cmp_pd(qu, zero, _CMP_GT_OQ),
                                       _mm256_cmp_pd(qv, zero, _CMP_GT_OQ));
    const __m256d qu2 = _mm256_mul_pd(qu, qu);
    const __m256d wv = _mm256_mul_pd(_mm256_mul_pd(qv, qv), qv);
    acc0 = _mm256_add_pd(acc0, _mm256_and_pd(_mm256_mul_pd(_mm256_mul_pd(qu2, qu), wv), mask));
    acc1 = _mm256_add_pd(acc1, _mm256_and_pd(_mm256_mul_pd(_mm256_mul_pd(u, qu2), wv), mask));
  }

  double s0 = hsum(acc0);
  double s1 = hsum(acc1);
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

// Read by the dispatcher as data; no code from this TU runs before the CPU
// check passes.
extern const Backend kAvx2Backend;
const Backend kAvx2Backend{"avx2", sums_1d_avx2, sums_2d_avx2};

}  // namespace detail
}  // namespace sindex::kern

#endif  // __AVX2__
