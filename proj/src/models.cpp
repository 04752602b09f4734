#include "sindex/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "sindex/estimator.hpp"
#include "sindex/score.hpp"

namespace sindex {

Link link_from_name(const std::string& name) {
  if (name == "identity") return Link::identity;
  if (name == "sine") return Link::sine;
  if (name == "cubic-smooth" || name == "cubic_smooth") return Link::cubic_smooth;
  throw IngestError("unknown link '" + name + "'; valid: identity, sine, cubic-smooth");
}

ErrorLaw error_from_name(const std::string& name) {
  if (name == "gaussian") return ErrorLaw::gaussian;
  if (name == "laplace") return ErrorLaw::laplace;
  if (name == "student-t" || name == "student_t") return ErrorLaw::student_t;
  throw IngestError("unknown error law '" + name + "'; valid: gaussian, laplace, student-t");
}

std::string link_name(Link link) {
  switch (link) {
    case Link::identity: return "identity";
    case Link::sine: return "sine";
    case Link::cubic_smooth: return "cubic-smooth";
  }
  return "?";
}

std::string error_name(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::gaussian: return "gaussian";
    case ErrorLaw::laplace: return "laplace";
    case ErrorLaw::student_t: return "student-t";
  }
  return "?";
}

double ModelSpec::link_value(double t) const {
  switch (link) {
    case Link::identity: return t;
    case Link::sine: return std::sin(t);
    case Link::cubic_smooth: return t + std::sin(t);
  }
  return t;
}

double ModelSpec::link_deriv(double t) const {
  switch (link) {
    case Link::identity: return 1.0;
    case Link::sine: return std::cos(t);
    case Link::cubic_smooth: return 1.0 + std::cos(t);
  }
  return 1.0;
}

double ModelSpec::log_density(double t, double y) const {
  const double r = y - link_value(t);
  const double s = sigma_or_scale;
  switch (error) {
    case ErrorLaw::gaussian:
      return -0.5 * r * r / (s * s) - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
    case ErrorLaw::laplace:
      return -std::abs(r) / s - std::log(2.0 * s);
    case ErrorLaw::student_t: {
      const double nu = static_cast<double>(t_dof);
      const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                       0.5 * std::log(nu * std::numbers::pi) - std::log(s);
      return c - 0.5 * (nu + 1.0) * std::log1p(r * r / (nu * s * s));
    }
  }
  return 0.0;
}

double analytic_score(const ModelSpec& model, double t, double y) {
  const double r = y - model.link_value(t);
  const double gp = model.link_deriv(t);
  const double s = model.sigma_or_scale;
  switch (model.error) {
    case ErrorLaw::gaussian:
      return gp * r / (s * s);
    case ErrorLaw::laplace:
      // defined as 0 at the non-differentiable point r = 0
      return r == 0.0 ? 0.0 : gp * (r > 0.0 ? 1.0 : -1.0) / s;
    case ErrorLaw::student_t: {
      const double nu = static_cast<double>(model.t_dof);
      return gp * (nu + 1.0) * r / (nu * s * s + r * r);
    }
  }
  return 0.0;
}

double sample_response(const ModelSpec& model, double t, Rng& rng) {
  double eps = 0.0;
  switch (model.error) {
    case ErrorLaw::gaussian:
      eps = model.sigma_or_scale * rng.normal();
      break;
    case ErrorLaw::laplace:
      eps = rng.laplace(model.sigma_or_scale);
      break;
    case ErrorLaw::student_t:
      eps = rng.student_t(model.t_dof, model.sigma_or_scale);
      break;
  }
  return model.link_value(t) + eps;
}

namespace {

double log_likelihood(const Dataset& data, const ModelSpec& model, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd t = data.x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    ll += model.log_density(t[i], data.y[i]);
  }
  return ll;
}

// beta(alpha) on the chart around the basis anchor, without renormalization.
Eigen::VectorXd chart_point(const ComplementBasis& basis, const Eigen::VectorXd& alpha) {
  const double asq = alpha.squaredNorm();
  return basis.columns() * alpha + std::sqrt(1.0 - asq) * basis.anchor().coords();
}

// Gradient of the log-likelihood in chart coordinates.
Eigen::VectorXd chart_gradient(const Dataset& data, const ModelSpec& model,
                               const ComplementBasis& basis, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd beta = chart_point(basis, alpha);
  const Eigen::VectorXd t = data.x * beta;
  Eigen::VectorXd score(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    score[i] = analytic_score(model, t[i], data.y[i]);
  }
  const Eigen::VectorXd grad_beta = data.x.transpose() * score;
  // d beta / d alpha = Gamma - anchor alpha^T / sqrt(1 - ||alpha||^2)
  const double root = std::sqrt(1.0 - alpha.squaredNorm());
  Eigen::VectorXd grad = basis.columns().transpose() * grad_beta;
  grad.noalias() -= (basis.anchor().coords().dot(grad_beta) / root) * alpha;
  return grad;
}

}  // namespace

Direction mle_fit(const Dataset& data, const ModelSpec& model, const Direction& init) {
  return mle_fit(data, model, init, MleOptions{});
}

Direction mle_fit(const Dataset& data, const ModelSpec& model, const Direction& init,
                  const MleOptions& options) {
  validate_dataset(data);
  if (init.dim() != data.p()) {
    throw std::invalid_argument("mle_fit: init dimension mismatch");
  }
  const double n = static_cast<double>(data.n());
  const Eigen::Index k = data.p() - 1;

  Direction beta = init;
  double grad_norm = 0.0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const ComplementBasis basis = orthonormal_complement(beta);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);
    const Eigen::VectorXd grad = chart_gradient(data, model, basis, zero);
    grad_norm = grad.norm();
    if (grad_norm / n < options.gradient_tol) {
      return beta;
    }

    // Hessian by central differences of the chart gradient.
    const double h = options.hessian_fd_step;
    Eigen::MatrixXd hess(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::VectorXd ap = zero;
      Eigen::VectorXd am = zero;
      ap[j] += h;
      am[j] -= h;
      hess.col(j) =
          (chart_gradient(data, model, basis, ap) - chart_gradient(data, model, basis, am)) /
          (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();

    // Newton ascent step; fall back to the gradient when the Hessian is not
    // negative definite.
    Eigen::VectorXd step;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(-hess);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      step = ldlt.solve(grad);
    } else {
      step = grad / n;
    }
    if (step.dot(grad) <= 0.0) {
      step = grad / n;
    }
    // keep the step inside the chart
    const double max_len = 0.9;
    if (step.norm() > max_len) {
      step *= max_len / step.norm();
    }

    const double ll0 = log_likelihood(data, model, beta.coords());
    const double slope = step.dot(grad);
    double scale = 1.0;
    Direction candidate = beta;
    bool accepted = false;
    for (int back = 0; back < 40; ++back) {
      const Eigen::VectorXd alpha = scale * step;
      if (alpha.squaredNorm() < 1.0) {
        candidate = chart_inverse(alpha, basis);
        // strict increase: an equal value means the improvement is below
        // floating-point resolution, which must fall through to the stall
        // handling rather than loop without progress
        if (log_likelihood(data, model, candidate.coords()) > ll0 + 1e-4 * scale * slope) {
          accepted = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!accepted) {
      // no measurable ascent left: converged when the gradient is already
      // small at a looser tolerance
      if (grad_norm / n < 1e-6) return beta;
      std::ostringstream msg;
      msg << "mle_fit: line search failed at iteration " << iter
          << " (projected gradient norm/n = " << grad_norm / n << ")";
      throw EstimationError(msg.str());
    }
    beta = candidate;
  }

  std::ostringstream msg;
  msg << "mle_fit: no convergence after " << options.max_iterations
      << " iterations (projected gradient norm/n = " << grad_norm / n << ", last iterate ["
      << beta.coords().transpose() << "])";
  throw EstimationError(msg.str());
}

PopulationInfo population_info(const ModelSpec& model, const Direction& beta, int p,
                               std::int64_t n_mc, Rng& rng) {
  if (beta.dim() != p) {
    throw std::invalid_argument("population_info: beta dimension mismatch");
  }
  if (n_mc < 1000) {
    throw std::invalid_argument("population_info: need n_mc >= 1000");
  }
  const int batches = 100;
  const std::int64_t per_batch = n_mc / batches;

  std::vector<Eigen::MatrixXd> batch_means;
  batch_means.reserve(batches);
  Eigen::VectorXd x(p);
  for (int b = 0; b < batches; ++b) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
    for (std::int64_t i = 0; i < per_batch; ++i) {
      for (int j = 0; j < p; ++j) x[j] = rng.normal();
      const double t = beta.coords().dot(x);
      const double y = sample_response(model, t, rng);
      const double l = analytic_score(model, t, y);
      acc.selfadjointView<Eigen::Lower>().rankUpdate(x, l * l);
    }
    Eigen::MatrixXd mean = acc.selfadjointView<Eigen::Lower>();
    mean /= static_cast<double>(per_batch);
    batch_means.push_back(std::move(mean));
  }

  Eigen::MatrixXd overall = Eigen::MatrixXd::Zero(p, p);
  for (const auto& m : batch_means) overall += m;
  overall /= static_cast<double>(batches);

  double var_sum = 0.0;
  for (const auto& m : batch_means) {
    var_sum += (m - overall).squaredNorm();
  }
  const double se_frob =
      std::sqrt(var_sum / static_cast<double>(batches - 1) / static_cast<double>(batches));

  PopulationInfo info;
  info.matrix = std::move(overall);
  info.mc_standard_error = se_frob;
  info.n_mc = per_batch * batches;
  return info;
}

AsymptoticCovariance asymptotic_covariance(const PopulationInfo& info, const Direction& beta,
                                           std::int64_t n) {
  if (info.matrix.rows() != beta.dim()) {
    throw std::invalid_argument("asymptotic_covariance: dimension mismatch");
  }
  if (n < 1) {
    throw std::invalid_argument("asymptotic_covariance: n must be positive");
  }
  const ComplementBasis basis = orthonormal_complement(beta);
  const Eigen::MatrixXd& gamma = basis.columns();
  const Eigen::MatrixXd restricted = gamma.transpose() * info.matrix * gamma;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(restricted);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(hi, 1e-300))) {
    throw EstimationError("asymptotic_covariance: restricted information is singular");
  }

  const Eigen::MatrixXd a = gamma * restricted.llt().solve(gamma.transpose());
  const Eigen::MatrixXd sandwich = a * info.matrix * a;

  AsymptoticCovariance out;
  out.forms_gap = (sandwich - a).norm();
  out.matrix = a / static_cast<double>(n);
  out.sandwich = sandwich / static_cast<double>(n);
  return out;
}

Direction oracle_one_step(const Dataset& data, const ModelSpec& model, const Direction& beta_n) {
  const AnalyticScore score(model);
  return one_step_update(beta_n, data, score);
}

}  // namespace sindex
