#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "sindex/dataset.hpp"
#include "sindex/score.hpp"
#include "sindex/sphere.hpp"

#include <json.hpp>

namespace sindex {

struct FitConfig {
  KernelSpec kernel;
  bool use_discretization = false;
  double discretization_mesh_constant = 0.1;
  bool use_sample_splitting = true;
  std::uint64_t seed = 0;
};

// Estimated information matrix at per-observation scale, (1/n) sum x x^T l^2.
struct FisherInfo {
  Eigen::MatrixXd matrix;
};

struct FitDiagnostics {
  double trim_fraction = 0.0;    // evaluation points with a trimmed density
  double sigma1 = 0.0;           // index-density bandwidth (full-sample fit)
  double sigma2 = 0.0;           // joint-density bandwidth (full-sample fit)
  double delta = 0.0;            // relative trim level
  Eigen::Index split_a = 0;      // fold sizes (0 when splitting is off)
  Eigen::Index split_b = 0;
  bool weak_signal = false;      // initial slope norm below the null heuristic
  double init_slope_norm = 0.0;
};

struct FitResult {
  Direction beta_hat;            // standardized predictor scale
  Direction beta_hat_original;   // original predictor scale
  Direction beta_init;
  FisherInfo info;                       // at beta_hat, full sample
  Eigen::MatrixXd asymptotic_covariance; // Gamma (Gamma^T I Gamma)^{-1} Gamma^T / n
  Eigen::VectorXd standard_errors;       // sqrt of the covariance diagonal
  FitDiagnostics diagnostics;
};

// Unit-norm OLS slope of y on x (intercept fitted and discarded). Requires
// standardized data.
Direction ols_direction(const Dataset& data);
Direction ols_direction(const Dataset& data, double* slope_norm_out);

// (1/n) sum_i x_i x_i^T l(beta^T x_i, y_i)^2. Throws EstimationError when
// the score vanishes at every observation.
FisherInfo info_matrix(const Dataset& data, const Direction& beta, const ScoreFunction& score);

// (1/n) sum_i x_i l(beta^T x_i, y_i).
Eigen::VectorXd score_sum(const Dataset& data, const Direction& beta, const ScoreFunction& score);

// Raw Newton step Gamma [Gamma^T I Gamma]^{-1} Gamma^T score_sum; lies in the
// complement of beta by construction. Throws EstimationError when the
// restricted information has condition number >= 1e10.
Eigen::VectorXd newton_step(const Dataset& data, const Direction& beta,
                            const ScoreFunction& score);

// beta + newton_step, retracted to the sphere.
Direction one_step_update(const Direction& beta_n, const Dataset& data,
                          const ScoreFunction& score);

// Rounds each coordinate to a grid of spacing mesh_constant / sqrt(n), then
// retracts; falls back to the input when everything rounds to zero.
Direction discretize(const Direction& beta, Eigen::Index n, double mesh_constant);

// Full pipeline: whiten, OLS start, optional discretization, one-step update
// with the kernel score (cross-fitted over two seeded folds by default),
// covariance at the updated point, map back to original units.
FitResult adaptive_fit(const Dataset& raw, const FitConfig& config);

nlohmann::json fit_result_to_json(const FitResult& result, const FitConfig& config);

}  // namespace sindex
