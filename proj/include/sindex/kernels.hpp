#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sindex::kern {

// Triweight kernel w(u) = (35/32)(1-u^2)^3 on |u| < 1, zero outside.
// Twice continuously differentiable with compact support;
// w'(u) = -(105/16) u (1-u^2)^2.
inline constexpr double kTriweightNorm = 35.0 / 32.0;
inline constexpr double kTriweightDerivNorm = -105.0 / 16.0;

inline double triweight(double u) {
  const double q = 1.0 - u * u;
  return q > 0.0 ? kTriweightNorm * q * q * q : 0.0;
}

inline double triweight_deriv(double u) {
  const double q = 1.0 - u * u;
  return q > 0.0 ? kTriweightDerivNorm * u * q * q : 0.0;
}

// Fused kernel sums over a training sample, the inner loop of every score
// evaluation. With u_i = (t - train_t[i]) * inv_ht and, for the 2-d case,
// v_i = (y - train_y[i]) * inv_hy:
//
//   1-d:  s0 = sum_i w(u_i)           s1 = sum_i w'(u_i)
//   2-d:  s0 = sum_i w(u_i) w(v_i)    s1 = sum_i w'(u_i) w(v_i)
//
// All variants accumulate the same per-element expressions; they may differ
// from the scalar reference only by summation order.
struct Sums {
  double s0 = 0.0;
  double s1 = 0.0;
};

struct Backend {
  const char* name;
  Sums (*sums_1d)(double t, const double* train_t, std::size_t m, double inv_ht);
  Sums (*sums_2d)(double t, double y, const double* train_t, const double* train_y,
                  std::size_t m, double inv_ht, double inv_hy);
};

const Backend& scalar_backend();

// Backends usable on this machine, scalar first.
std::vector<const Backend*> available_backends();

// Default backend: the widest available vector variant, overridable with the
// SINDEX_SIMD environment variable (scalar | avx2 | neon | auto). Resolved
// once per process.
const Backend& active_backend();

inline Sums sums_1d(double t, std::span<const double> train_t, double inv_ht) {
  return active_backend().sums_1d(t, train_t.data(), train_t.size(), inv_ht);
}

inline Sums sums_2d(double t, double y, std::span<const double> train_t,
                    std::span<const double> train_y, double inv_ht, double inv_hy) {
  return active_backend().sums_2d(t, y, train_t.data(), train_y.data(), train_t.size(),
                                  inv_ht, inv_hy);
}

}  // namespace sindex::kern
