#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ipca/errors.hpp"
#include "ipca/mesh.hpp"

namespace ipca {

/// Linear (P1) surface finite element system on a triangulated 2-manifold.
///
/// mass      M,  (M)_{jj'}  = integral of phi_j phi_j' over the surface
/// stiffness A,  (A)_{jj'}  = integral of grad phi_j . grad phi_j'
/// lumped_mass   diagonal of the row-sum lumped mass, Mt_jj = sum_j' M_jj'
///
/// Vector-valued functions with d channels are stored channel-major as
/// c = (c_1 | ... | c_d), each block of length kappa = node count. The
/// smoothing penalty is the block-diagonal operator applying
/// A Mt^{-1} A to each channel; it is exposed matrix-free and is never
/// assembled as a dense or sparse matrix.
struct FemSystem {
  Eigen::SparseMatrix<double> mass;
  Eigen::SparseMatrix<double> stiffness;
  Eigen::VectorXd lumped_mass;
  int channels = 1;
  int nodes = 0;

  int dim() const { return channels * nodes; }
};

/// Assembles mass/stiffness with exact closed-form P1 element matrices
/// (mass entries area/6 and area/12; edge-vector a.k.a. cotangent
/// stiffness). Lumped masses are checked strictly positive.
FemSystem assemble(const TriMesh& mesh, int channels = 1);

/// Applies the smoothing penalty: per channel q, A Mt^{-1} A c_q.
Eigen::VectorXd penalty_apply(const FemSystem& sys, const Eigen::VectorXd& c);

/// Quadratic form of the penalty, sum_q ||Mt^{-1/2} A c_q||^2 >= 0.
double penalty_quadform(const FemSystem& sys, const Eigen::VectorXd& c);

/// Diagonal of the penalty operator, diag_j = sum_k A_kj^2 / Mt_kk,
/// replicated per channel. Used for Jacobi preconditioning.
Eigen::VectorXd penalty_diagonal(const FemSystem& sys);

/// Discrete Dirichlet energy sum_q c_q^T A c_q.
double gradient_energy(const FemSystem& sys, const Eigen::VectorXd& c);

/// Discrete L2 inner product sum_q c1_q^T M c2_q.
double l2_inner(const FemSystem& sys, const Eigen::VectorXd& c1,
                const Eigen::VectorXd& c2);

/// sqrt(l2_inner(c, c)).
double m_norm(const FemSystem& sys, const Eigen::VectorXd& c);

/// Signed cosine l2_inner(a, b) / (||a||_M ||b||_M).
double m_correlation(const FemSystem& sys, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b);

/// Angle between the spans of a and b in the M inner product,
/// acos(|m_correlation|), in radians.
double m_angle(const FemSystem& sys, const Eigen::VectorXd& a,
               const Eigen::VectorXd& b);

}  // namespace ipca
