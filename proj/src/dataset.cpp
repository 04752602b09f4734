#include "sindex/dataset.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace sindex {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t");
    cells.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    std::ostringstream msg;
    msg << "row " << row << ", column " << col + 1 << ": cannot parse '" << cell
        << "' as a number";
    throw IngestError(msg.str());
  }
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "row " << row << ", column " << col + 1 << ": non-finite value '" << cell << "'";
    throw IngestError(msg.str());
  }
  return value;
}

}  // namespace

void validate_dataset(const Dataset& data) {
  if (data.p() < 2) {
    throw IngestError("dataset needs at least 2 predictor columns");
  }
  if (data.n() < data.p() + 2) {
    std::ostringstream msg;
    msg << "dataset needs at least p + 2 = " << data.p() + 2 << " rows, got " << data.n();
    throw IngestError(msg.str());
  }
  if (data.y.size() != data.n()) {
    throw IngestError("dataset x/y row count mismatch");
  }
  if (!data.x.allFinite() || !data.y.allFinite()) {
    throw IngestError("dataset contains non-finite entries");
  }
}

Dataset load_dataset(std::istream& source) {
  std::string line;
  if (!std::getline(source, line)) {
    throw IngestError("empty input: missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 3) {
    std::ostringstream msg;
    msg << "header has " << header.size()
        << " columns; need at least 2 predictor columns and a response column";
    throw IngestError(msg.str());
  }
  const std::size_t ncols = header.size();
  const std::size_t p = ncols - 1;

  std::vector<double> values;
  std::size_t nrows = 0;
  std::size_t row = 1;  // header is row 0
  while (std::getline(source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      ++row;
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != ncols) {
      std::ostringstream msg;
      msg << "row " << row << ": expected " << ncols << " cells, got " << cells.size();
      throw IngestError(msg.str());
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      values.push_back(parse_cell(cells[c], row, c));
    }
    ++nrows;
    ++row;
  }

  Dataset data;
  data.x.resize(nrows, p);
  data.y.resize(nrows);
  for (std::size_t r = 0; r < nrows; ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      data.x(r, c) = values[r * ncols + c];
    }
    data.y(r) = values[r * ncols + p];
  }
  data.standardized = false;
  validate_dataset(data);
  return data;
}

std::pair<Whitener, Dataset> whiten(const Dataset& data) {
  validate_dataset(data);
  const Eigen::Index n = data.n();

  const Eigen::VectorXd mean = data.x.colwise().mean();
  const Eigen::MatrixXd centered = data.x.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd evals = eig.eigenvalues();
  const double lo = evals.minCoeff();
  const double hi = evals.maxCoeff();
  if (!(lo > 1e-10 * hi)) {
    std::ostringstream msg;
    msg << "sample covariance is rank deficient: eigenvalue ratio "
        << (hi > 0.0 ? lo / hi : 0.0) << " below 1e-10";
    throw EstimationError(msg.str());
  }

  const Eigen::VectorXd inv_sqrt = evals.cwiseSqrt().cwiseInverse();
  Whitener w;
  w.mean = mean;
  w.transform = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  w.inverse_transform =
      eig.eigenvectors() * evals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();

  Dataset out;
  out.x = centered * w.transform;  // transform is symmetric
  out.y = data.y;
  out.standardized = true;
  return {std::move(w), std::move(out)};
}

Direction unwhiten_direction(const Whitener& w, const Direction& beta_z) {
  return retract(w.transform * beta_z.coords());
}

}  // namespace sindex
