#include "sindex/sphere.hpp"

#include <cmath>
#include <sstream>

namespace sindex {

namespace {

constexpr double kUnitTol = 1e-12;

}  // namespace

Direction::Direction(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) {
    throw std::invalid_argument("Direction: dimension must be at least 2");
  }
  const double norm = coords_.norm();
  if (std::abs(norm - 1.0) > kUnitTol || !std::isfinite(norm)) {
    std::ostringstream msg;
    msg << "Direction: vector is not unit norm (||v|| = " << norm << ")";
    throw std::invalid_argument(msg.str());
  }
}

Direction Direction::negated() const { return Direction(-coords_); }

ComplementBasis::ComplementBasis(Eigen::MatrixXd columns, Direction anchor)
    : columns_(std::move(columns)), anchor_(std::move(anchor)) {
  if (columns_.rows() != anchor_.dim() || columns_.cols() != anchor_.dim() - 1) {
    throw std::invalid_argument("ComplementBasis: shape mismatch with anchor");
  }
}

Eigen::MatrixXd projection_complement(const Direction& beta) {
  const Eigen::VectorXd& b = beta.coords();
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(b.size(), b.size());
  q.noalias() -= b * b.transpose();
  return q;
}

ComplementBasis orthonormal_complement(const Direction& beta) {
  const Eigen::Index p = beta.dim();
  Eigen::VectorXd b = beta.coords();

  // Fixed sign rule: make the largest-magnitude coordinate positive.
  Eigen::Index k = 0;
  b.cwiseAbs().maxCoeff(&k);
  if (b[k] < 0.0) b = -b;

  // Reflect b onto alpha * e_1 with alpha opposite the sign of b_1, so the
  // Householder vector never degenerates.
  const double alpha = b[0] >= 0.0 ? -1.0 : 1.0;
  Eigen::VectorXd v = b;
  v[0] -= alpha;
  const double vsq = v.squaredNorm();

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p, p);
  h.noalias() -= (2.0 / vsq) * (v * v.transpose());

  return ComplementBasis(h.rightCols(p - 1), beta);
}

Eigen::VectorXd chart_forward(const Direction& beta, const ComplementBasis& basis) {
  if (beta.dot(basis.anchor()) <= 0.0) {
    throw EstimationError("chart_forward: point is outside the open hemisphere of the anchor");
  }
  return basis.columns().transpose() * beta.coords();
}

Direction chart_inverse(const Eigen::VectorXd& alpha, const ComplementBasis& basis) {
  if (alpha.size() != basis.anchor().dim() - 1) {
    throw std::invalid_argument("chart_inverse: alpha has wrong dimension");
  }
  const double asq = alpha.squaredNorm();
  if (asq >= 1.0) {
    throw EstimationError("chart_inverse: ||alpha|| >= 1 is outside the chart domain");
  }
  Eigen::VectorXd v = basis.columns() * alpha;
  v.noalias() += std::sqrt(1.0 - asq) * basis.anchor().coords();
  return retract(v);
}

Direction retract(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 1e-10)) {
    throw EstimationError("retract: vector norm below 1e-10, direction undefined");
  }
  return Direction(v / norm);
}

Direction align_sign(const Direction& beta, const Direction& reference) {
  return beta.dot(reference) >= 0.0 ? beta : beta.negated();
}

Direction canonical_sign(const Direction& beta) {
  const Eigen::VectorXd& b = beta.coords();
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    if (std::abs(b[i]) > 1e-12) {
      return b[i] > 0.0 ? beta : beta.negated();
    }
  }
  return beta;
}

double angular_error(const Direction& a, const Direction& b) {
  const double c = std::min(1.0, std::abs(a.dot(b)));
  return std::acos(c);
}

}  // namespace sindex
