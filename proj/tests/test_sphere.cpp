#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sindex/rng.hpp"
#include "sindex/sphere.hpp"

using namespace sindex;

namespace {

Direction random_direction(int p, Rng& rng) {
  Eigen::VectorXd v(p);
  for (int i = 0; i < p; ++i) v[i] = rng.normal();
  return retract(v);
}

Eigen::VectorXd unit(int p, int axis) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
  v[axis] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("Direction validates unit norm and dimension") {
  CHECK_THROWS_AS(Direction(Eigen::VectorXd::Constant(3, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(Direction(Eigen::VectorXd::Constant(1, 1.0)), std::invalid_argument);
  const Direction d{unit(4, 2)};
  CHECK(d.dim() == 4);
}

TEST_CASE("projection_complement axis and direct formula") {
  const Eigen::MatrixXd q1 = projection_complement(Direction(unit(2, 0)));
  CHECK(q1(0, 0) == doctest::Approx(0.0));
  CHECK(q1(0, 1) == doctest::Approx(0.0));
  CHECK(q1(1, 1) == doctest::Approx(1.0));

  Eigen::VectorXd b(2);
  b << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const Eigen::MatrixXd q2 = projection_complement(Direction(b));
  CHECK(q2(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q2(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(q2(1, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(q2(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("projector identities over random directions") {
  Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 2 + static_cast<int>(rng.bounded(7));
    const Direction beta = random_direction(p, rng);
    const Eigen::MatrixXd q = projection_complement(beta);
    CHECK((q - q.transpose()).norm() <= 1e-12);
    CHECK((q * q - q).norm() <= 1e-10);
    CHECK((q * beta.coords()).norm() <= 1e-10);
    CHECK(q.trace() == doctest::Approx(p - 1).epsilon(1e-10));
  }
}

TEST_CASE("orthonormal_complement axis case spans the remaining axes") {
  const ComplementBasis basis = orthonormal_complement(Direction(unit(3, 0)));
  CHECK((basis.columns().col(0) - unit(3, 1)).norm() <= 1e-12);
  CHECK((basis.columns().col(1) - unit(3, 2)).norm() <= 1e-12);
}

TEST_CASE("orthonormal_complement of (0.6, 0.8)") {
  Eigen::VectorXd b(2);
  b << 0.6, 0.8;
  const ComplementBasis basis = orthonormal_complement(Direction(b));
  // Householder with the fixed sign rule gives (-0.8, 0.6).
  CHECK(basis.columns()(0, 0) == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(basis.columns()(1, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(std::abs(basis.columns().col(0).dot(b)) <= 1e-12);
  CHECK(basis.columns().col(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthonormal_complement invariants and determinism over random inputs") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const Direction beta = random_direction(6, rng);
    const ComplementBasis basis = orthonormal_complement(beta);
    const Eigen::MatrixXd& g = basis.columns();
    CHECK((g.transpose() * g - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-12);
    CHECK((g.transpose() * beta.coords()).norm() <= 1e-12);

    // (Gamma, beta) assembled is orthogonal
    Eigen::MatrixXd full(6, 6);
    full.leftCols(5) = g;
    full.col(5) = beta.coords();
    CHECK((full.transpose() * full - Eigen::MatrixXd::Identity(6, 6)).norm() <= 1e-10);

    const ComplementBasis again = orthonormal_complement(beta);
    CHECK((again.columns() - g).norm() == 0.0);  // bit-identical
  }
}

TEST_CASE("chart centered at the anchor") {
  Rng rng(7);
  const Direction anchor = random_direction(4, rng);
  const ComplementBasis basis = orthonormal_complement(anchor);
  const Eigen::VectorXd alpha = chart_forward(anchor, basis);
  CHECK(alpha.norm() <= 1e-12);
  const Direction back = chart_inverse(Eigen::VectorXd::Zero(3), basis);
  CHECK(angular_error(back, anchor) <= 1e-12);
}

TEST_CASE("chart_forward evaluates the complement coordinate") {
  const Direction anchor{unit(2, 0)};
  const ComplementBasis basis = orthonormal_complement(anchor);
  const double theta = 0.3;
  Eigen::VectorXd b(2);
  b << std::cos(theta), std::sin(theta);
  const Eigen::VectorXd alpha = chart_forward(Direction(b), basis);
  CHECK(std::abs(std::abs(alpha[0]) - std::sin(theta)) <= 1e-12);
}

TEST_CASE("chart_inverse direct evaluation in p = 3") {
  const Direction anchor{unit(3, 0)};
  const ComplementBasis basis = orthonormal_complement(anchor);
  Eigen::VectorXd alpha(2);
  alpha << 0.6, 0.0;
  const Direction beta = chart_inverse(alpha, basis);
  CHECK(beta.coords()[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(beta.coords()[1] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(beta.coords()[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("chart round trips on the open hemisphere") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 2 + static_cast<int>(rng.bounded(5));
    const Direction anchor = random_direction(p, rng);
    const ComplementBasis basis = orthonormal_complement(anchor);

    Direction beta = random_direction(p, rng);
    beta = align_sign(beta, anchor);
    if (beta.dot(anchor) <= 1e-6) continue;  // avoid the chart boundary

    const Eigen::VectorXd alpha = chart_forward(beta, basis);
    CHECK((chart_inverse(alpha, basis).coords() - beta.coords()).norm() <= 1e-10);

    Eigen::VectorXd a(p - 1);
    for (int i = 0; i < p - 1; ++i) a[i] = rng.uniform(-0.5, 0.5);
    if (a.norm() >= 0.99) continue;
    const Direction point = chart_inverse(a, basis);
    CHECK(point.coords().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((chart_forward(point, basis) - a).norm() <= 1e-10);
  }
}

TEST_CASE("chart domain errors") {
  const Direction anchor{unit(3, 0)};
  const ComplementBasis basis = orthonormal_complement(anchor);
  CHECK_THROWS_AS(chart_forward(anchor.negated(), basis), EstimationError);
  Eigen::VectorXd alpha(2);
  alpha << 1.0, 0.2;
  CHECK_THROWS_AS(chart_inverse(alpha, basis), EstimationError);
}

TEST_CASE("retract") {
  Eigen::VectorXd v(2);
  v << 3.0, 4.0;
  const Direction d = retract(v);
  CHECK(d.coords()[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(d.coords()[1] == doctest::Approx(0.8).epsilon(1e-15));

  const Direction again = retract(d.coords());
  CHECK((again.coords() - d.coords()).norm() <= 1e-15);

  CHECK_THROWS_AS(retract(Eigen::VectorXd::Zero(2)), EstimationError);
}

TEST_CASE("align_sign and its tie break") {
  const Direction ref{unit(3, 0)};
  CHECK(angular_error(align_sign(ref.negated(), ref), ref) == 0.0);
  CHECK(align_sign(ref, ref).coords()[0] == 1.0);

  const Direction orth{unit(3, 1)};
  CHECK(align_sign(orth, ref).coords()[1] == 1.0);  // ties resolve to +beta

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Direction beta = random_direction(3, rng);
    const Direction once = align_sign(beta, ref);
    const Direction twice = align_sign(once, ref);
    CHECK((once.coords() - twice.coords()).norm() == 0.0);
  }
}
