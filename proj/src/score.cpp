#include "sindex/score.hpp"

#include <cmath>
#include <numbers>

namespace sindex {

namespace {

// Peak of the d-dimensional standard normal density; the relative trim level
// is expressed as a fraction of this, so one constant covers both densities.
double std_normal_peak(int d) {
  return std::pow(2.0 * std::numbers::pi, -0.5 * d);
}

double sample_sd(std::span<const double> v) {
  const std::size_t m = v.size();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(m - 1));
}

}  // namespace

double kernel_value(std::span<const double> u) {
  if (u.size() < 1 || u.size() > 2) {
    throw std::invalid_argument("kernel_value: dimension must be 1 or 2");
  }
  double w = 1.0;
  for (double uj : u) w *= kern::triweight(uj);
  return w;
}

double kde(const Eigen::MatrixXd& samples, const Eigen::VectorXd& point, double sigma) {
  const Eigen::Index m = samples.rows();
  const Eigen::Index d = samples.cols();
  if (d < 1 || d > 2 || point.size() != d) {
    throw std::invalid_argument("kde: dimension must be 1 or 2 and match the point");
  }
  if (m == 0) return 0.0;
  const double inv = 1.0 / sigma;
  if (d == 1) {
    const auto s = kern::sums_1d(point[0], {samples.col(0).data(), static_cast<std::size_t>(m)}, inv);
    return s.s0 / (static_cast<double>(m) * sigma);
  }
  const auto s = kern::sums_2d(point[0], point[1],
                               {samples.col(0).data(), static_cast<std::size_t>(m)},
                               {samples.col(1).data(), static_cast<std::size_t>(m)}, inv, inv);
  return s.s0 / (static_cast<double>(m) * sigma * sigma);
}

double kde_partial1(const Eigen::MatrixXd& samples, const Eigen::VectorXd& point, double sigma) {
  const Eigen::Index m = samples.rows();
  const Eigen::Index d = samples.cols();
  if (d < 1 || d > 2 || point.size() != d) {
    throw std::invalid_argument("kde_partial1: dimension must be 1 or 2 and match the point");
  }
  if (m == 0) return 0.0;
  const double inv = 1.0 / sigma;
  if (d == 1) {
    const auto s = kern::sums_1d(point[0], {samples.col(0).data(), static_cast<std::size_t>(m)}, inv);
    return s.s1 / (static_cast<double>(m) * sigma * sigma);
  }
  const auto s = kern::sums_2d(point[0], point[1],
                               {samples.col(0).data(), static_cast<std::size_t>(m)},
                               {samples.col(1).data(), static_cast<std::size_t>(m)}, inv, inv);
  return s.s1 / (static_cast<double>(m) * sigma * sigma * sigma);
}

double trimmed_log_deriv(const Eigen::MatrixXd& samples, const Eigen::VectorXd& point,
                         double sigma, double delta) {
  const double density = kde(samples, point, sigma);
  if (!(density > delta)) return 0.0;
  return kde_partial1(samples, point, sigma) / density;
}

std::size_t ScoreFunction::evaluate(std::span<const double> t, std::span<const double> y,
                                    std::span<double> out) const {
  for (std::size_t i = 0; i < t.size(); ++i) {
    out[i] = (*this)(t[i], y[i]);
  }
  return 0;
}

ScoreField::Detail ScoreField::evaluate_detail(double t, double y) const {
  const double m = static_cast<double>(train_t_std_.size());
  const double u = t / scale_t_;
  const double v = y / scale_y_;

  Detail detail;

  // index density, d = 1
  {
    const double inv = 1.0 / sigma1_std_;
    const auto s = kern::sums_1d(u, train_t_std_, inv);
    const double g = s.s0 / (m * sigma1_std_);
    if (g > cut1_) {
      const double gp = s.s1 / (m * sigma1_std_ * sigma1_std_);
      detail.value -= gp / g;
    } else {
      detail.index_trimmed = true;
    }
  }

  // joint density, d = 2
  {
    const double inv = 1.0 / sigma2_std_;
    const auto s = kern::sums_2d(u, v, train_t_std_, train_y_std_, inv, inv);
    const double h = s.s0 / (m * sigma2_std_ * sigma2_std_);
    if (h > cut2_) {
      const double hp = s.s1 / (m * sigma2_std_ * sigma2_std_ * sigma2_std_);
      detail.value += hp / h;
    } else {
      detail.joint_trimmed = true;
    }
  }

  // back to t units: d/dt = (1/scale_t) d/du
  detail.value /= scale_t_;
  return detail;
}

double ScoreField::operator()(double t, double y) const {
  return evaluate_detail(t, y).value;
}

std::size_t ScoreField::evaluate(std::span<const double> t, std::span<const double> y,
                                 std::span<double> out) const {
  std::size_t trimmed = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Detail d = evaluate_detail(t[i], y[i]);
    out[i] = d.value;
    if (d.joint_trimmed || d.index_trimmed) ++trimmed;
  }
  return trimmed;
}

ScoreField fit_score(std::span<const double> train_t, std::span<const double> train_y,
                     const KernelSpec& spec) {
  if (train_t.size() != train_y.size()) {
    throw std::invalid_argument("fit_score: t and y lengths differ");
  }
  const std::size_t m = train_t.size();
  if (m < 10) {
    throw EstimationError("fit_score: need at least 10 training observations");
  }
  if (!(spec.bandwidth_constant > 0.0) || !(spec.trim_constant > 0.0) ||
      !(spec.trim_exponent > 0.0) || !(spec.trim_exponent < 0.5)) {
    throw std::invalid_argument("fit_score: invalid kernel spec");
  }

  const double st = sample_sd(train_t);
  const double sy = sample_sd(train_y);
  if (!(st > 1e-12) || !(sy > 1e-12)) {
    throw EstimationError("fit_score: degenerate training data (zero coordinate variance)");
  }

  ScoreField field;
  field.scale_t_ = st;
  field.scale_y_ = sy;
  field.train_t_std_.resize(m);
  field.train_y_std_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    field.train_t_std_[i] = train_t[i] / st;
    field.train_y_std_[i] = train_y[i] / sy;
  }

  const double md = static_cast<double>(m);
  field.sigma1_std_ = spec.bandwidth_constant * std::pow(md, -1.0 / 5.0);
  field.sigma2_std_ = spec.bandwidth_constant * std::pow(md, -1.0 / 6.0);
  field.delta_ = spec.trim_constant * std::pow(md, -spec.trim_exponent);
  field.cut1_ = field.delta_ * std_normal_peak(1);
  field.cut2_ = field.delta_ * std_normal_peak(2);
  return field;
}

double score_l2_diagnostic(const ScoreFunction& field, const ScoreFunction& truth,
                           const Eigen::MatrixXd& eval_x, const Eigen::VectorXd& eval_y,
                           const Direction& beta) {
  const Eigen::Index n = eval_x.rows();
  if (n == 0 || eval_y.size() != n || eval_x.cols() != beta.dim()) {
    throw std::invalid_argument("score_l2_diagnostic: shape mismatch");
  }
  const Eigen::VectorXd t = eval_x * beta.coords();
  std::vector<double> est(n), tru(n);
  field.evaluate({t.data(), static_cast<std::size_t>(n)},
                 {eval_y.data(), static_cast<std::size_t>(n)}, est);
  truth.evaluate({t.data(), static_cast<std::size_t>(n)},
                 {eval_y.data(), static_cast<std::size_t>(n)}, tru);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double diff = est[i] - tru[i];
    acc += eval_x.row(i).squaredNorm() * diff * diff;
  }
  return acc / static_cast<double>(n);
}

}  // namespace sindex
