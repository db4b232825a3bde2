#pragma once

// Dense reference computations for the unit and acceptance suites. These
// deliberately avoid the library's iterative solver paths: systems are
// assembled densely and handed to Eigen's direct decompositions, so the
// matrix-free CG/CGLS implementations are checked against an independent
// route.

#include <Eigen/Dense>
#include <vector>

#include "ipca/fem.hpp"
#include "ipca/forward_operator.hpp"
#include "ipca/rng.hpp"

namespace ipca::testing {

inline Eigen::MatrixXd dense_mass(const ipca::FemSystem& fem) {
  return Eigen::MatrixXd(fem.mass);
}

inline Eigen::MatrixXd dense_stiffness(const ipca::FemSystem& fem) {
  return Eigen::MatrixXd(fem.stiffness);
}

// Block-diagonal penalty A Mt^{-1} A, one block per channel.
inline Eigen::MatrixXd dense_penalty(const ipca::FemSystem& fem) {
  const Eigen::MatrixXd a = dense_stiffness(fem);
  const Eigen::MatrixXd block =
      a * fem.lumped_mass.cwiseInverse().asDiagonal() * a;
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(fem.dim(), fem.dim());
  for (int q = 0; q < fem.channels; ++q) {
    penalty.block(q * fem.nodes, q * fem.nodes, fem.nodes, fem.nodes) = block;
  }
  return penalty;
}

// Block-diagonal mass, one block per channel (the vector-valued L2 Gram).
inline Eigen::MatrixXd dense_block_mass(const ipca::FemSystem& fem) {
  const Eigen::MatrixXd m = dense_mass(fem);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(fem.dim(), fem.dim());
  for (int q = 0; q < fem.channels; ++q) {
    out.block(q * fem.nodes, q * fem.nodes, fem.nodes, fem.nodes) = m;
  }
  return out;
}

// Dense system matrix sum_l w_l K_l^T K_l + lambda * penalty.
inline Eigen::MatrixXd dense_gram(
    const std::vector<std::pair<double, const ipca::ForwardOperator*>>& terms,
    const ipca::FemSystem& fem, double lambda) {
  Eigen::MatrixXd gram = lambda * dense_penalty(fem);
  for (const auto& [weight, op] : terms) {
    gram += weight * (op->matrix.transpose() * op->matrix);
  }
  return gram;
}

// Direct dense solve of the regularized system via an LU factorization.
inline Eigen::VectorXd dense_solve(
    const std::vector<std::pair<double, const ipca::ForwardOperator*>>& terms,
    const ipca::FemSystem& fem, double lambda, const Eigen::VectorXd& rhs) {
  return dense_gram(terms, fem, lambda).fullPivLu().solve(rhs);
}

inline Eigen::VectorXd random_vector(ipca::Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline Eigen::MatrixXd random_matrix(ipca::Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

// Random orthogonal matrix from the QR of a Gaussian draw.
inline Eigen::MatrixXd random_orthogonal(ipca::Rng& rng, int n) {
  const Eigen::MatrixXd g = random_matrix(rng, n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

// Euclidean angle between the spans of two vectors.
inline double span_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double cosine =
      std::min(1.0, std::abs(a.dot(b)) / (a.norm() * b.norm()));
  return std::acos(cosine);
}

}  // namespace ipca::testing
