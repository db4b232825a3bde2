#pragma once

#include <Eigen/Dense>
#include <string>

#include "ipca/errors.hpp"

namespace ipca {

/// Known linear map from node-sampled (possibly vector-valued) function
/// values to sensor readings: an s x (d*kappa) matrix. The evaluation
/// step is the identity on nodal coefficient vectors, so applying the
/// operator to coefficients is a plain matrix-vector product.
struct ForwardOperator {
  Eigen::MatrixXd matrix;
  std::string id;

  int sensors() const { return static_cast<int>(matrix.rows()); }
  int domain_dim() const { return static_cast<int>(matrix.cols()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& c) const {
    if (c.size() != matrix.cols()) {
      throw DimensionMismatch("operator '" + id + "' expects length " +
                              std::to_string(matrix.cols()) + ", got " +
                              std::to_string(c.size()));
    }
    return matrix * c;
  }

  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const {
    if (y.size() != matrix.rows()) {
      throw DimensionMismatch("operator '" + id + "' adjoint expects length " +
                              std::to_string(matrix.rows()) + ", got " +
                              std::to_string(y.size()));
    }
    return matrix.transpose() * y;
  }
};

}  // namespace ipca
