#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sindex/estimator.hpp"
#include "sindex/models.hpp"
#include "sindex/rng.hpp"
#include "sindex/simulate.hpp"

using namespace sindex;

namespace {

Direction ones_direction(int p) {
  return Direction(Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p))));
}

// score function that returns a fixed affine function of (t, y)
class AffineScore final : public ScoreFunction {
 public:
  AffineScore(double ct, double cy, double c0) : ct_(ct), cy_(cy), c0_(c0) {}
  double operator()(double t, double y) const override { return ct_ * t + cy_ * y + c0_; }

 private:
  double ct_, cy_, c0_;
};

}  // namespace

TEST_CASE("ols_direction recovers a noiseless linear model exactly") {
  Rng rng(60);
  const int n = 200;
  const Direction beta0 = ones_direction(3);
  Dataset data;
  data.x.resize(n, 3);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) data.x(i, j) = rng.normal();
    data.y[i] = data.x.row(i).dot(beta0.coords());
  }
  const auto [w, z] = whiten(data);
  const Direction fit = align_sign(unwhiten_direction(w, ols_direction(z)), beta0);
  CHECK((fit.coords() - beta0.coords()).norm() <= 1e-10);
}

TEST_CASE("ols_direction is consistent for a monotone link") {
  const Direction beta0 = ones_direction(3);
  const ModelSpec model{Link::sine, ErrorLaw::gaussian, 0.1, 5};
  PredictorLaw law{LawKind::gaussian, 3, 5};
  Rng rng(61);
  const Dataset data = gen_dataset(model, law, beta0, 5000, rng);
  const auto [w, z] = whiten(data);
  const Direction fit = unwhiten_direction(w, ols_direction(z));
  CHECK(angular_error(fit, beta0) < 0.1);
}

TEST_CASE("ols_direction null model returns a unit vector with a weak slope") {
  Rng rng(62);
  Dataset data;
  const int n = 2000;
  data.x.resize(n, 2);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.x(i, 0) = rng.normal();
    data.x(i, 1) = rng.normal();
    data.y[i] = rng.normal();  // independent of x
  }
  const auto [w, z] = whiten(data);
  double slope_norm = 0.0;
  const Direction fit = ols_direction(z, &slope_norm);
  CHECK(fit.coords().norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(slope_norm <= 0.1);  // around sd(y) sqrt(p/n) under the null
}

TEST_CASE("info_matrix") {
  const Direction beta0 = ones_direction(3);
  const ModelSpec model{Link::identity, ErrorLaw::gaussian, 1.0, 5};
  PredictorLaw law{LawKind::gaussian, 3, 5};
  Rng rng(63);
  const Dataset data = gen_dataset(model, law, beta0, 10000, rng);
  const auto [w, z] = whiten(data);

  SUBCASE("matches the population identity matrix") {
    const AnalyticScore truth(model);
    const FisherInfo info = info_matrix(z, beta0, truth);
    CHECK((info.matrix - info.matrix.transpose()).norm() <= 1e-10);
    CHECK((info.matrix - Eigen::MatrixXd::Identity(3, 3)).norm() /
              Eigen::MatrixXd::Identity(3, 3).norm() <=
          0.10);
  }

  SUBCASE("zero score is a degenerate-information error") {
    const AffineScore zero(0.0, 0.0, 0.0);
    CHECK_THROWS_AS(info_matrix(z, beta0, zero), EstimationError);
  }

  SUBCASE("scaling the score scales the matrix quadratically") {
    const AffineScore one(0.3, 0.7, 0.1);
    const AffineScore three(0.9, 2.1, 0.3);
    const FisherInfo i1 = info_matrix(z, beta0, one);
    const FisherInfo i3 = info_matrix(z, beta0, three);
    CHECK((i3.matrix - 9.0 * i1.matrix).norm() <= 1e-9 * i1.matrix.norm());
  }
}

TEST_CASE("score_sum") {
  const Direction beta0 = ones_direction(3);
  const ModelSpec model{Link::identity, ErrorLaw::gaussian, 1.0, 5};
  PredictorLaw law{LawKind::gaussian, 3, 5};
  const AnalyticScore truth(model);

  SUBCASE("zero function gives the zero vector") {
    Rng rng(64);
    const Dataset data = gen_dataset(model, law, beta0, 500, rng);
    const AffineScore zero(0.0, 0.0, 0.0);
    CHECK(score_sum(data, beta0, zero).norm() == 0.0);
  }

  SUBCASE("mean zero at the truth, nonzero off the truth") {
    const int reps = 40;
    const int n = 10000;
    Eigen::MatrixXd at_truth(reps, 3);
    Eigen::MatrixXd off_truth(reps, 2);

    // a direction at angular distance 0.3 from beta0
    const ComplementBasis basis = orthonormal_complement(beta0);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(2);
    alpha[0] = std::sin(0.3);
    const Direction off = chart_inverse(alpha, basis);
    const ComplementBasis off_basis = orthonormal_complement(off);

    for (int r = 0; r < reps; ++r) {
      Rng rng(7100 + r);
      const Dataset data = gen_dataset(model, law, beta0, n, rng);
      const auto [w, z] = whiten(data);
      at_truth.row(r) = score_sum(z, beta0, truth).transpose();
      off_truth.row(r) =
          (off_basis.columns().transpose() * score_sum(z, off, truth)).transpose();
    }

    const Eigen::RowVectorXd mean_at = at_truth.colwise().mean();
    const Eigen::RowVectorXd se_at =
        ((at_truth.rowwise() - mean_at).colwise().squaredNorm() /
         static_cast<double>(reps - 1) / static_cast<double>(reps))
            .cwiseSqrt();
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(mean_at[j]) <= 3.0 * se_at[j] + 1e-12);
    }

    const Eigen::RowVectorXd mean_off = off_truth.colwise().mean();
    const double se_off =
        std::sqrt((off_truth.rowwise() - mean_off).squaredNorm() /
                  static_cast<double>(reps - 1) / static_cast<double>(reps));
    CHECK(mean_off.norm() > 5.0 * se_off);
  }
}

TEST_CASE("newton_step lies in the complement of the current direction") {
  const Direction beta0 = ones_direction(4);
  const ModelSpec model{Link::identity, ErrorLaw::gaussian, 1.0, 5};
  PredictorLaw law{LawKind::gaussian, 4, 5};
  const AnalyticScore truth(model);
  Rng rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset data = gen_dataset(model, law, beta0, 300, rng);
    Eigen::VectorXd v(4);
    for (int j = 0; j < 4; ++j) v[j] = rng.normal();
    const Direction at = retract(v);
    const Eigen::VectorXd step = newton_step(data, at, truth);
    CHECK(std::abs(step.dot(at.coords())) <= 1e-12 * std::max(1.0, step.norm()));
  }
}

TEST_CASE("one-step contraction from a displaced start") {
  const Direction beta0 = ones_direction(3);
  const ModelSpec model{Link::identity, ErrorLaw::gaussian, 1.0, 5};
  PredictorLaw law{LawKind::gaussian, 3, 5};
  const AnalyticScore truth(model);

  const ComplementBasis basis = orthonormal_complement(beta0);
  int contracted = 0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(3200 + s);
    const Dataset data = gen_dataset(model, law, beta0, 10000, rng);
    const auto [w, z] = whiten(data);

    Eigen::VectorXd alpha(2);
    const double phase = 2.0 * 3.14159265358979 * s / seeds;
    alpha << std::sin(0.2) * std::cos(phase), std::sin(0.2) * std::sin(phase);
    const Direction start = chart_inverse(alpha, basis);
    CHECK(angular_error(start, beta0) == doctest::Approx(0.2).epsilon(1e-6));

    const Direction updated = one_step_update(start, z, truth);
    if (angular_error(updated, beta0) < 0.05) ++contracted;
  }
  CHECK(contracted >= 45);
}

TEST_CASE("discretize") {
  SUBCASE("grid point is a fixed point") {
    Eigen::VectorXd e1(2);
    e1 << 1.0, 0.0;
    const Direction d = discretize(Direction(e1), 100, 0.1);
    CHECK((d.coords() - e1).norm() <= 1e-15);
  }

  SUBCASE("direct rounding example") {
    Eigen::VectorXd b(2);
    b << 0.6049, 0.7963;
    // spacing 0.01 = mesh_constant / sqrt(n) with mesh 1.0, n = 10000
    const Direction d = discretize(retract(b), 10000, 1.0);
    CHECK(d.coords()[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(d.coords()[1] == doctest::Approx(0.8).epsilon(1e-12));
  }

  SUBCASE("pre-retraction displacement is bounded by the grid diagonal") {
    Rng rng(66);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd v(3);
      for (int j = 0; j < 3; ++j) v[j] = rng.normal();
      const Direction beta = retract(v);
      const Eigen::Index n = 50 + static_cast<Eigen::Index>(rng.bounded(5000));
      const double mesh = 0.1;
      const double spacing = mesh / std::sqrt(static_cast<double>(n));
      Eigen::VectorXd rounded = (beta.coords() / spacing).array().round() * spacing;
      CHECK((rounded - beta.coords()).norm() <= spacing * std::sqrt(3.0) / 2.0 + 1e-15);
      discretize(beta, n, mesh);  // must not throw
    }
  }
}

TEST_CASE("adaptive_fit") {
  const Direction beta0 = ones_direction(3);
  const ModelSpec model{Link::identity, ErrorLaw::gaussian, 1.0, 5};
  PredictorLaw law{LawKind::gaussian, 3, 5};
  Rng rng(67);
  const Dataset data = gen_dataset(model, law, beta0, 4000, rng);

  FitConfig config;
  config.seed = 17;

  const FitResult fit = adaptive_fit(data, config);

  SUBCASE("basic contracts") {
    CHECK(fit.beta_hat.coords().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.beta_hat_original.coords().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(angular_error(fit.beta_hat_original, beta0) < 0.1);
    CHECK((fit.asymptotic_covariance * fit.beta_hat.coords()).norm() <= 1e-8);
    CHECK((fit.asymptotic_covariance - fit.asymptotic_covariance.transpose()).norm() <= 1e-10);
    CHECK(fit.standard_errors.minCoeff() >= 0.0);
    CHECK(fit.diagnostics.split_a + fit.diagnostics.split_b == 4000);
    CHECK(!fit.diagnostics.weak_signal);
  }

  SUBCASE("determinism: identical config gives bit-identical results") {
    const FitResult again = adaptive_fit(data, config);
    CHECK((again.beta_hat.coords() - fit.beta_hat.coords()).norm() == 0.0);
    CHECK((again.beta_hat_original.coords() - fit.beta_hat_original.coords()).norm() == 0.0);
    CHECK((again.asymptotic_covariance - fit.asymptotic_covariance).norm() == 0.0);
    CHECK(again.diagnostics.trim_fraction == fit.diagnostics.trim_fraction);
  }

  SUBCASE("different split seed changes the fit only slightly") {
    FitConfig other = config;
    other.seed = 18;
    const FitResult again = adaptive_fit(data, other);
    CHECK(angular_error(again.beta_hat, fit.beta_hat) < 0.05);
  }

  SUBCASE("no splitting path works") {
    FitConfig plain = config;
    plain.use_sample_splitting = false;
    const FitResult fit2 = adaptive_fit(data, plain);
    CHECK(fit2.diagnostics.split_a == 0);
    CHECK(angular_error(fit2.beta_hat_original, beta0) < 0.1);
  }

  SUBCASE("discretization path works") {
    FitConfig disc = config;
    disc.use_discretization = true;
    const FitResult fit2 = adaptive_fit(data, disc);
    CHECK(angular_error(fit2.beta_hat_original, beta0) < 0.1);
  }

  SUBCASE("json serialization carries the contract fields") {
    const nlohmann::json j = fit_result_to_json(fit, config);
    CHECK(j.contains("beta_hat"));
    CHECK(j.contains("beta_hat_original"));
    CHECK(j.contains("beta_init"));
    CHECK(j.contains("std_errors"));
    CHECK(j.contains("info_eigenvalues"));
    CHECK(j.contains("trim_fraction"));
    CHECK(j.contains("config"));
    CHECK(j.contains("seed"));
    CHECK(j["beta_hat"].size() == 3);
  }
}

TEST_CASE("adaptive_fit flags a vanishing signal but still returns an estimate") {
  // build a response whose in-sample slope sits below the weak-signal
  // threshold 1e-2 sd(y)/sqrt(n): residualize noise against the predictors
  // and add a miniature linear component
  Rng rng(68);
  Dataset data;
  const int n = 3000;
  data.x.resize(n, 3);
  Eigen::VectorXd noise(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) data.x(i, j) = rng.normal();
    noise[i] = rng.normal();
  }
  Eigen::MatrixXd design(n, 4);
  design.col(0).setOnes();
  design.rightCols(3) = data.x;
  noise -= design * design.colPivHouseholderQr().solve(noise);  // exactly orthogonal
  const Direction beta0 = ones_direction(3);
  data.y = 1e-4 * (data.x * beta0.coords()) + noise;

  FitConfig config;
  config.seed = 3;
  const FitResult fit = adaptive_fit(data, config);
  CHECK(fit.diagnostics.weak_signal);
  CHECK(fit.diagnostics.init_slope_norm < 1e-2);
  CHECK(fit.beta_hat.coords().norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adaptive_fit standard errors scale like 1/sqrt(n)") {
  const Direction beta0 = ones_direction(3);
  const ModelSpec model{Link::identity, ErrorLaw::gaussian, 1.0, 5};
  PredictorLaw law{LawKind::gaussian, 3, 5};

  const auto median_se = [&](Eigen::Index n, std::uint64_t seed_base) {
    std::vector<double> ses;
    for (int r = 0; r < 15; ++r) {
      Rng rng(seed_base + r);
      const Dataset data = gen_dataset(model, law, beta0, n, rng);
      FitConfig config;
      config.seed = 100 + r;
      const FitResult fit = adaptive_fit(data, config);
      ses.push_back(fit.standard_errors.mean());
    }
    std::sort(ses.begin(), ses.end());
    return ses[ses.size() / 2];
  };

  const double se_small = median_se(800, 9100);
  const double se_large = median_se(3200, 9500);
  CHECK(se_large / se_small == doctest::Approx(0.5).epsilon(0.2));
}
