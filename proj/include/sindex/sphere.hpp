#pragma once

#include <Eigen/Dense>

#include "sindex/common.hpp"

namespace sindex {

// A point of the constraint manifold {beta : ||beta|| = 1}, p >= 2.
class Direction {
 public:
  // Requires ||coords|| = 1 within 1e-12; throws std::invalid_argument otherwise.
  explicit Direction(Eigen::VectorXd coords);

  const Eigen::VectorXd& coords() const { return coords_; }
  Eigen::Index dim() const { return coords_.size(); }
  double dot(const Direction& other) const { return coords_.dot(other.coords_); }
  Direction negated() const;

 private:
  Eigen::VectorXd coords_;
};

// Orthonormal basis of the complement of an anchor direction: p x (p-1)
// columns with Gamma^T Gamma = I and Gamma^T anchor = 0.
class ComplementBasis {
 public:
  ComplementBasis(Eigen::MatrixXd columns, Direction anchor);

  const Eigen::MatrixXd& columns() const { return columns_; }
  const Direction& anchor() const { return anchor_; }

 private:
  Eigen::MatrixXd columns_;
  Direction anchor_;
};

// Q_beta = I - beta beta^T: symmetric idempotent projector with Q beta = 0.
Eigen::MatrixXd projection_complement(const Direction& beta);

// Deterministic Householder complement. Sign rule: beta is flipped so its
// largest-magnitude coordinate (lowest index on ties) is positive, then
// reflected onto -sign(beta_1) e_1; the reflector's columns 2..p form the
// basis. Equal inputs give bit-identical output.
ComplementBasis orthonormal_complement(const Direction& beta);

// Chart coordinates alpha = Gamma^T beta around the anchor; defined on the
// open hemisphere beta . anchor > 0 (throws EstimationError outside it).
Eigen::VectorXd chart_forward(const Direction& beta, const ComplementBasis& basis);

// Inverse chart beta = Gamma alpha + sqrt(1 - ||alpha||^2) anchor; requires
// ||alpha|| < 1.
Direction chart_inverse(const Eigen::VectorXd& alpha, const ComplementBasis& basis);

// v / ||v||; throws EstimationError for ||v|| <= 1e-10.
Direction retract(const Eigen::VectorXd& v);

// beta if beta . reference >= 0, else -beta (ties resolve to +beta).
Direction align_sign(const Direction& beta, const Direction& reference);

// Flip so the first coordinate with |beta_i| > 1e-12 is positive. Used when
// no reference direction exists.
Direction canonical_sign(const Direction& beta);

// arccos(|a . b|), sign-invariant distance on the sphere.
double angular_error(const Direction& a, const Direction& b);

}  // namespace sindex
