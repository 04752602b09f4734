#include "sindex/estimator.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "sindex/rng.hpp"

namespace sindex {

namespace {

Eigen::VectorXd evaluate_scores(const Dataset& data, const Direction& beta,
                                const ScoreFunction& score, std::size_t* trimmed = nullptr) {
  const Eigen::Index n = data.n();
  const Eigen::VectorXd t = data.x * beta.coords();
  Eigen::VectorXd values(n);
  const std::size_t cut = score.evaluate({t.data(), static_cast<std::size_t>(n)},
                                         {data.y.data(), static_cast<std::size_t>(n)},
                                         {values.data(), static_cast<std::size_t>(n)});
  if (trimmed) *trimmed = cut;
  return values;
}

FisherInfo info_from_values(const Dataset& data, const Eigen::VectorXd& values) {
  const Eigen::Index n = data.n();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(data.p(), data.p());
  bool any_nonzero = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values[i] != 0.0) any_nonzero = true;
    acc.selfadjointView<Eigen::Lower>().rankUpdate(data.x.row(i).transpose(),
                                                   values[i] * values[i]);
  }
  if (!any_nonzero) {
    throw EstimationError(
        "info_matrix: estimated score vanishes at every observation (all trimmed)");
  }
  FisherInfo info;
  info.matrix = acc.selfadjointView<Eigen::Lower>();
  info.matrix /= static_cast<double>(n);
  return info;
}

Eigen::VectorXd sum_from_values(const Dataset& data, const Eigen::VectorXd& values) {
  return data.x.transpose() * values / static_cast<double>(data.n());
}

// Gamma [Gamma^T I Gamma]^{-1} Gamma^T s with a condition-number guard.
Eigen::VectorXd restricted_solve(const ComplementBasis& basis, const Eigen::MatrixXd& info,
                                 const Eigen::VectorXd& s) {
  const Eigen::MatrixXd& gamma = basis.columns();
  const Eigen::MatrixXd restricted = gamma.transpose() * info * gamma;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(restricted);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo >= 1e10) {
    std::ostringstream msg;
    msg << "restricted information is numerically singular (condition "
        << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity())
        << "); consider a larger sample or a larger bandwidth";
    throw EstimationError(msg.str());
  }
  return gamma * eig.eigenvectors() *
         eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose() * (gamma.transpose() * s);
}

Dataset subset(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), data.p());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(rows[i]);
    out.y[static_cast<Eigen::Index>(i)] = data.y[rows[i]];
  }
  out.standardized = data.standardized;
  return out;
}

ScoreField fit_field(const Dataset& data, const Direction& beta, const KernelSpec& spec) {
  const Eigen::VectorXd t = data.x * beta.coords();
  return fit_score({t.data(), static_cast<std::size_t>(t.size())},
                   {data.y.data(), static_cast<std::size_t>(data.y.size())}, spec);
}

}  // namespace

Direction ols_direction(const Dataset& data) { return ols_direction(data, nullptr); }

Direction ols_direction(const Dataset& data, double* slope_norm_out) {
  validate_dataset(data);
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();

  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = data.x;
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(data.y);
  const Eigen::VectorXd slope = coef.tail(p);
  if (slope_norm_out) *slope_norm_out = slope.norm();
  return retract(slope);
}

FisherInfo info_matrix(const Dataset& data, const Direction& beta, const ScoreFunction& score) {
  return info_from_values(data, evaluate_scores(data, beta, score));
}

Eigen::VectorXd score_sum(const Dataset& data, const Direction& beta,
                          const ScoreFunction& score) {
  return sum_from_values(data, evaluate_scores(data, beta, score));
}

Eigen::VectorXd newton_step(const Dataset& data, const Direction& beta,
                            const ScoreFunction& score) {
  const Eigen::VectorXd values = evaluate_scores(data, beta, score);
  const FisherInfo info = info_from_values(data, values);
  const Eigen::VectorXd s = sum_from_values(data, values);
  return restricted_solve(orthonormal_complement(beta), info.matrix, s);
}

Direction one_step_update(const Direction& beta_n, const Dataset& data,
                          const ScoreFunction& score) {
  return retract(beta_n.coords() + newton_step(data, beta_n, score));
}

Direction discretize(const Direction& beta, Eigen::Index n, double mesh_constant) {
  if (!(mesh_constant > 0.0) || n < 1) {
    throw std::invalid_argument("discretize: mesh constant and n must be positive");
  }
  const double spacing = mesh_constant / std::sqrt(static_cast<double>(n));
  Eigen::VectorXd rounded = (beta.coords() / spacing).array().round() * spacing;
  if (rounded.norm() <= 1e-10) {
    return beta;  // documented fallback: everything rounded away
  }
  return retract(rounded);
}

FitResult adaptive_fit(const Dataset& raw, const FitConfig& config) {
  validate_dataset(raw);
  auto [whitener, data] = whiten(raw);
  const Eigen::Index n = data.n();

  double slope_norm = 0.0;
  Direction beta_init = ols_direction(data, &slope_norm);

  FitDiagnostics diag;
  diag.init_slope_norm = slope_norm;
  const double sd_y = std::sqrt((data.y.array() - data.y.mean()).square().sum() /
                                static_cast<double>(n - 1));
  diag.weak_signal = slope_norm < 1e-2 * sd_y / std::sqrt(static_cast<double>(n));

  Direction beta_n = beta_init;
  if (config.use_discretization) {
    beta_n = discretize(beta_n, n, config.discretization_mesh_constant);
  }

  const ComplementBasis basis = orthonormal_complement(beta_n);
  Eigen::VectorXd step;
  std::size_t trimmed_total = 0;
  std::size_t evaluated_total = 0;

  if (config.use_sample_splitting) {
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(config.seed);
    rng.shuffle(order);
    const std::size_t half = (order.size() + 1) / 2;
    const std::vector<Eigen::Index> idx_a(order.begin(), order.begin() + half);
    const std::vector<Eigen::Index> idx_b(order.begin() + half, order.end());
    const Dataset fold_a = subset(data, idx_a);
    const Dataset fold_b = subset(data, idx_b);
    diag.split_a = fold_a.n();
    diag.split_b = fold_b.n();

    step = Eigen::VectorXd::Zero(data.p());
    int folds = 0;
    for (const auto& [train, eval] : {std::pair{&fold_a, &fold_b}, std::pair{&fold_b, &fold_a}}) {
      const ScoreField field = fit_field(*train, beta_n, config.kernel);
      std::size_t trimmed = 0;
      const Eigen::VectorXd values = evaluate_scores(*eval, beta_n, field, &trimmed);
      trimmed_total += trimmed;
      evaluated_total += static_cast<std::size_t>(eval->n());
      const FisherInfo info = info_from_values(*eval, values);
      step += restricted_solve(basis, info.matrix, sum_from_values(*eval, values));
      ++folds;
    }
    step /= static_cast<double>(folds);
  } else {
    const ScoreField field = fit_field(data, beta_n, config.kernel);
    std::size_t trimmed = 0;
    const Eigen::VectorXd values = evaluate_scores(data, beta_n, field, &trimmed);
    trimmed_total += trimmed;
    evaluated_total += static_cast<std::size_t>(n);
    const FisherInfo info = info_from_values(data, values);
    step = restricted_solve(basis, info.matrix, sum_from_values(data, values));
  }

  Direction beta_hat = retract(beta_n.coords() + step);

  // Covariance estimate from a full-sample information matrix at beta_hat.
  const ScoreField final_field = fit_field(data, beta_hat, config.kernel);
  diag.sigma1 = final_field.sigma1();
  diag.sigma2 = final_field.sigma2();
  diag.delta = final_field.delta();
  std::size_t trimmed_final = 0;
  const Eigen::VectorXd final_values = evaluate_scores(data, beta_hat, final_field, &trimmed_final);
  trimmed_total += trimmed_final;
  evaluated_total += static_cast<std::size_t>(n);
  diag.trim_fraction =
      static_cast<double>(trimmed_total) / static_cast<double>(evaluated_total);

  const FisherInfo final_info = info_from_values(data, final_values);
  const ComplementBasis final_basis = orthonormal_complement(beta_hat);
  const Eigen::MatrixXd& gamma = final_basis.columns();
  const Eigen::MatrixXd restricted = gamma.transpose() * final_info.matrix * gamma;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(restricted);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw EstimationError("adaptive_fit: restricted information at beta_hat is singular");
  }
  Eigen::MatrixXd cov = gamma * eig.eigenvectors() *
                        eig.eigenvalues().cwiseInverse().asDiagonal() *
                        eig.eigenvectors().transpose() * gamma.transpose();
  cov /= static_cast<double>(n);

  // Sign convention: first coordinate of beta_hat with |b_i| > 1e-12 positive;
  // beta_init follows so the pair stays on one hemisphere.
  const Direction canonical = canonical_sign(beta_hat);
  const bool flipped = canonical.dot(beta_hat) < 0.0;
  beta_hat = canonical;
  if (flipped) beta_init = beta_init.negated();

  FitResult result{
      .beta_hat = beta_hat,
      .beta_hat_original = unwhiten_direction(whitener, beta_hat),
      .beta_init = beta_init,
      .info = final_info,
      .asymptotic_covariance = cov,
      .standard_errors = cov.diagonal().cwiseSqrt(),
      .diagnostics = diag,
  };
  return result;
}

nlohmann::json fit_result_to_json(const FitResult& result, const FitConfig& config) {
  const auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(result.info.matrix);

  nlohmann::json j;
  j["beta_hat"] = vec(result.beta_hat.coords());
  j["beta_hat_original"] = vec(result.beta_hat_original.coords());
  j["beta_init"] = vec(result.beta_init.coords());
  j["std_errors"] = vec(result.standard_errors);
  j["info_eigenvalues"] = vec(eig.eigenvalues());
  j["trim_fraction"] = result.diagnostics.trim_fraction;
  j["diagnostics"] = {
      {"sigma1", result.diagnostics.sigma1},
      {"sigma2", result.diagnostics.sigma2},
      {"delta", result.diagnostics.delta},
      {"split_a", result.diagnostics.split_a},
      {"split_b", result.diagnostics.split_b},
      {"weak_signal", result.diagnostics.weak_signal},
      {"init_slope_norm", result.diagnostics.init_slope_norm},
  };
  j["config"] = {
      {"kernel",
       {{"bandwidth_constant", config.kernel.bandwidth_constant},
        {"trim_constant", config.kernel.trim_constant},
        {"trim_exponent", config.kernel.trim_exponent}}},
      {"use_discretization", config.use_discretization},
      {"discretization_mesh_constant", config.discretization_mesh_constant},
      {"use_sample_splitting", config.use_sample_splitting},
  };
  j["seed"] = config.seed;
  return j;
}

}  // namespace sindex
