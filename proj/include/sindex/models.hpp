#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "sindex/dataset.hpp"
#include "sindex/rng.hpp"
#include "sindex/sphere.hpp"

namespace sindex {

enum class Link { identity, sine, cubic_smooth };
enum class ErrorLaw { gaussian, laplace, student_t };

Link link_from_name(const std::string& name);          // throws IngestError
ErrorLaw error_from_name(const std::string& name);     // throws IngestError
std::string link_name(Link link);
std::string error_name(ErrorLaw law);

// Additive single-index model y = g(t) + eps with known link and error law;
// the conditional density is eta(y|t) = f_eps(y - g(t)).
struct ModelSpec {
  Link link = Link::identity;
  ErrorLaw error = ErrorLaw::gaussian;
  double sigma_or_scale = 1.0;
  int t_dof = 5;  // student_t only; integer >= 3

  double link_value(double t) const;
  double link_deriv(double t) const;
  double log_density(double t, double y) const;
};

// l(t, y) = d/dt log eta(y|t) = -g'(t) f'(y - g(t)) / f(y - g(t)).
double analytic_score(const ModelSpec& model, double t, double y);

// y = g(t) + error draw; deterministic per generator state.
double sample_response(const ModelSpec& model, double t, Rng& rng);

// Sphere-constrained maximum likelihood: damped Newton in the chart around
// the current iterate, re-anchored each step. Stops when the projected
// gradient norm per observation falls below 1e-8, or below 1e-6 once the
// line search can no longer measure an improvement; throws EstimationError
// after 100 iterations.
Direction mle_fit(const Dataset& data, const ModelSpec& model, const Direction& init);

struct MleOptions {
  double gradient_tol = 1e-8;
  int max_iterations = 100;
  double hessian_fd_step = 1e-5;
};

Direction mle_fit(const Dataset& data, const ModelSpec& model, const Direction& init,
                  const MleOptions& options);

// Monte Carlo estimate of I(beta) = E[X X^T l^2(beta^T X, Y)] under
// X ~ N(0, I_p). mc_standard_error is the batch-means standard error in the
// Frobenius sense.
struct PopulationInfo {
  Eigen::MatrixXd matrix;
  double mc_standard_error = 0.0;
  std::int64_t n_mc = 0;
};

PopulationInfo population_info(const ModelSpec& model, const Direction& beta, int p,
                               std::int64_t n_mc, Rng& rng);

// Asymptotic covariance of the efficient estimate at sample size n. The
// sandwich form A I A with A = Gamma (Gamma^T I Gamma)^{-1} Gamma^T and its
// reduced form A are both computed; `forms_gap` reports their Frobenius
// distance (zero up to rounding).
struct AsymptoticCovariance {
  Eigen::MatrixXd matrix;    // reduced form, divided by n
  Eigen::MatrixXd sandwich;  // sandwich form, divided by n
  double forms_gap = 0.0;
};

AsymptoticCovariance asymptotic_covariance(const PopulationInfo& info, const Direction& beta,
                                           std::int64_t n);

// One-step update with the analytic score in place of the kernel estimate;
// isolates the one-step mechanism from score estimation.
Direction oracle_one_step(const Dataset& data, const ModelSpec& model, const Direction& beta_n);

}  // namespace sindex
