#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "sindex/common.hpp"
#include "sindex/kernels.hpp"
#include "sindex/models.hpp"

namespace sindex {

// Tuning constants for the kernel score estimate. Bandwidths follow
// sigma_d = bandwidth_constant * s_d * m^{-1/(d+4)} with s_d the geometric
// mean of the coordinate standard deviations; the trim level is
// delta = trim_constant * m^{-trim_exponent}, expressed relative to the
// d-dimensional standard normal peak in standardized coordinates.
struct KernelSpec {
  double bandwidth_constant = 1.25;
  double trim_constant = 0.05;
  double trim_exponent = 0.1;  // in (0, 1/2)
};

// Product triweight kernel, d = u.size() in {1, 2}.
double kernel_value(std::span<const double> u);

// Kernel density estimate (m sigma^d)^{-1} sum_i w((point - sample_i)/sigma)
// over the rows of `samples`. The 1/m factor makes the estimate integrate
// to one.
double kde(const Eigen::MatrixXd& samples, const Eigen::VectorXd& point, double sigma);

// Exact partial derivative of kde in the first coordinate of `point`.
double kde_partial1(const Eigen::MatrixXd& samples, const Eigen::VectorXd& point, double sigma);

// (kde_partial1 / kde)(point) when kde(point) > delta, else 0.
double trimmed_log_deriv(const Eigen::MatrixXd& samples, const Eigen::VectorXd& point,
                         double sigma, double delta);

// Common surface for the estimated and the analytic score; estimators only
// see this interface.
class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;
  virtual double operator()(double t, double y) const = 0;

  // Batch evaluation; returns the number of points whose kernel density fell
  // below a trim cut (0 for analytic scores).
  virtual std::size_t evaluate(std::span<const double> t, std::span<const double> y,
                               std::span<double> out) const;
};

// Kernel estimate of the conditional score: the difference of the trimmed
// log-density derivatives of the joint (t, y) density and the index density.
class ScoreField final : public ScoreFunction {
 public:
  double operator()(double t, double y) const override;
  std::size_t evaluate(std::span<const double> t, std::span<const double> y,
                       std::span<double> out) const override;

  struct Detail {
    double value = 0.0;
    bool joint_trimmed = false;
    bool index_trimmed = false;
  };
  Detail evaluate_detail(double t, double y) const;

  std::size_t train_size() const { return train_t_std_.size(); }
  double sigma1() const { return sigma1_std_ * scale_t_; }
  double sigma2() const { return sigma2_std_ * std::sqrt(scale_t_ * scale_y_); }
  double delta() const { return delta_; }

 private:
  friend ScoreField fit_score(std::span<const double>, std::span<const double>,
                              const KernelSpec& spec);

  std::vector<double> train_t_std_;  // t / scale_t
  std::vector<double> train_y_std_;  // y / scale_y
  double scale_t_ = 1.0;
  double scale_y_ = 1.0;
  double sigma1_std_ = 1.0;   // d = 1 bandwidth in standardized units
  double sigma2_std_ = 1.0;   // d = 2 bandwidth in standardized units
  double delta_ = 0.0;        // relative trim level
  double cut1_ = 0.0;         // absolute cut on the standardized index density
  double cut2_ = 0.0;         // absolute cut on the standardized joint density
};

// Fits the score estimate on (t_i, y_i) pairs. Requires m >= 10 and
// nondegenerate coordinate variances; throws EstimationError otherwise.
ScoreField fit_score(std::span<const double> train_t, std::span<const double> train_y,
                     const KernelSpec& spec);

// Analytic model score behind the ScoreFunction interface.
class AnalyticScore final : public ScoreFunction {
 public:
  explicit AnalyticScore(ModelSpec model) : model_(model) {}
  double operator()(double t, double y) const override {
    return analytic_score(model_, t, y);
  }

 private:
  ModelSpec model_;
};

// Empirical mean of ||x_i||^2 (field(t_i, y_i) - truth(t_i, y_i))^2 with
// t_i = beta^T x_i: the convergence diagnostic for score estimates.
double score_l2_diagnostic(const ScoreFunction& field, const ScoreFunction& truth,
                           const Eigen::MatrixXd& eval_x, const Eigen::VectorXd& eval_y,
                           const Direction& beta);

}  // namespace sindex
