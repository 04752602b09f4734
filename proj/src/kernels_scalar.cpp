#include "sindex/kernels.hpp"

// Scalar reference kernels. The vector backends must reproduce these sums up
// to summation order; the equivalence tests compare against this file.

namespace sindex::kern {

namespace {

Sums sums_1d_scalar(double t, const double* train_t, std::size_t m, double inv_ht) {
  double s0 = 0.0;
  double s1 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
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

Sums sums_2d_scalar(double t, double y, const double* train_t, const double* train_y,
                    std::size_t m, double inv_ht, double inv_hy) {
  double s0 = 0.0;
  double s1 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
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

const Backend& scalar_backend() {
  static const Backend backend{"scalar", sums_1d_scalar, sums_2d_scalar};
  return backend;
}

}  // namespace sindex::kern
