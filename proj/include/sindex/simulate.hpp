#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sindex/estimator.hpp"
#include "sindex/models.hpp"

#include <json.hpp>

namespace sindex {

enum class LawKind { gaussian, elliptical_t, uniform_cube };

LawKind law_from_name(const std::string& name);  // throws IngestError
std::string law_name(LawKind kind);

// Predictor distribution, standardized to mean zero and covariance I_p.
// elliptical_t requires integer dof > 2 (scale-mixture of normals).
struct PredictorLaw {
  LawKind kind = LawKind::gaussian;
  int p = 3;
  int t_dof = 5;
};

Eigen::MatrixXd gen_predictors(const PredictorLaw& law, Eigen::Index n, Rng& rng);

Dataset gen_dataset(const ModelSpec& model, const PredictorLaw& law, const Direction& beta0,
                    Eigen::Index n, Rng& rng);

// Monte Carlo estimate of || Q_beta E[X kappa(beta^T X, Y)] || with a
// batch-means standard error. kappa values are clipped at 1e6.
struct Lemma1Result {
  double residual_norm = 0.0;
  double mc_se = 0.0;
  std::int64_t clipped = 0;
  double ratio() const { return mc_se > 0.0 ? residual_norm / mc_se : 0.0; }
};

using KappaFn = std::function<double(double, double)>;

Lemma1Result lemma1_residual(const KappaFn& kappa, const Direction& beta,
                             const ModelSpec& model, const PredictorLaw& law,
                             std::int64_t n_mc, Rng& rng);

// Built-in kappa functions: constant, ty, y_cubed, t2y, true_score.
const std::vector<std::string>& kappa_names();
KappaFn kappa_by_name(const std::string& name, const ModelSpec& model);  // throws IngestError

enum class EstimatorKind { ols, adaptive, oracle_one_step, mle };

EstimatorKind estimator_from_name(const std::string& name);  // throws IngestError
std::string estimator_name(EstimatorKind kind);

struct McConfig {
  ModelSpec model;
  PredictorLaw law;
  std::optional<Direction> beta0;  // default (1,...,1)/sqrt(p)
  std::vector<Eigen::Index> n_grid;
  int replications = 0;
  std::vector<EstimatorKind> estimators;
  FitConfig fit;
  std::uint64_t seed = 0;
};

// Validates every field and throws IngestError listing all violations.
void validate_mc_config(const McConfig& config);

struct McCell {
  std::string estimator;
  Eigen::Index n = 0;
  double median_angular_error = 0.0;
  double iqr_angular_error = 0.0;
  Eigen::MatrixXd covariance;  // of sqrt(n) Gamma0^T (beta_hat - beta0)
  std::optional<double> efficiency_vs_mle;
  int failures = 0;
  int used = 0;
  std::vector<int> failed_replications;
};

struct McReport {
  McConfig config;
  std::vector<McCell> cells;                  // estimator-major, n-minor order
  std::map<std::string, double> rate_slopes;  // log median error vs log n
};

// Runs the full comparison. Replications execute on `threads` workers
// (0 = hardware concurrency) with per-replication seed streams; the report
// does not depend on the thread count. Aborts with EstimationError when more
// than 20% of replications fail in any cell.
McReport run_monte_carlo(const McConfig& config, int threads = 0);

nlohmann::json report_to_json(const McReport& report);
void write_report_csv(const McReport& report, std::ostream& out);

// Score-estimate convergence diagnostic over a sample-size grid: fits the
// kernel score on n training points at beta0 and evaluates the weighted L2
// distance to the analytic score on a fresh evaluation sample.
struct ScoreDiagPoint {
  Eigen::Index n = 0;
  double diagnostic = 0.0;
};

struct ScoreDiagReport {
  std::vector<ScoreDiagPoint> points;
  std::optional<double> slope;  // log diagnostic vs log n, grids of size >= 2
};

ScoreDiagReport score_diag(const ModelSpec& model, const PredictorLaw& law,
                           const Direction& beta0, const std::vector<Eigen::Index>& n_grid,
                           Eigen::Index n_eval, const KernelSpec& kernel, std::uint64_t seed);

}  // namespace sindex
