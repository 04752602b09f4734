#pragma once

#include <Eigen/Dense>
#include <istream>
#include <utility>

#include "sindex/common.hpp"
#include "sindex/sphere.hpp"

namespace sindex {

// n observations of (x in R^p, y). `standardized` marks data already mapped
// to sample mean zero and sample covariance I_p.
struct Dataset {
  Eigen::MatrixXd x;  // n x p
  Eigen::VectorXd y;  // n
  bool standardized = false;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
};

// Checks n >= p + 2, p >= 2 and finiteness; throws IngestError.
void validate_dataset(const Dataset& data);

// CSV with a header row, p >= 2 predictor columns followed by the response
// column. Errors name the offending row and column.
Dataset load_dataset(std::istream& source);

// Affine map to sample mean zero, sample covariance I_p. `transform` is the
// symmetric inverse square root of the sample covariance.
struct Whitener {
  Eigen::VectorXd mean;
  Eigen::MatrixXd transform;
  Eigen::MatrixXd inverse_transform;
};

// z_i = transform (x_i - mean) via symmetric eigendecomposition of the
// sample covariance. Throws EstimationError when the smallest eigenvalue is
// below 1e-10 of the largest.
std::pair<Whitener, Dataset> whiten(const Dataset& data);

// Direction of transform * beta_z in original predictor units: the index
// beta_z^T z equals (transform beta_z)^T (x - mean).
Direction unwhiten_direction(const Whitener& w, const Direction& beta_z);

}  // namespace sindex
