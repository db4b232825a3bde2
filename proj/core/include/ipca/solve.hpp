#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ipca/fem.hpp"
#include "ipca/forward_operator.hpp"

namespace ipca {

/// Matrix-free symmetric PSD operator
///   x  ->  sum_l w_l K_l^T K_l x  +  lambda * P x
/// with P the lumped-mass smoothing penalty. This is the system operator
/// of the regularized component updates (the weights are squared scores,
/// or squared score norms in the covariance case).
struct GramOperator {
  struct Term {
    double weight;
    const ForwardOperator* op;
  };

  std::vector<Term> terms;
  const FemSystem* fem = nullptr;
  double lambda = 0.0;
  int threads = 1;

  int dim() const { return fem->dim(); }

  /// Checks dimensions and that the operator is not identically zero.
  void validate() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  /// Diagonal estimate sum_l w_l colnorms^2(K_l) + lambda diag(P),
  /// used as Jacobi preconditioner.
  Eigen::VectorXd diagonal() const;
};

enum class SolveMethod { CG, SparseLSQ };

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  SolveMethod method = SolveMethod::CG;
};

/// Solves (sum_l w_l K_l^T K_l + lambda P) c = rhs by Jacobi-preconditioned
/// conjugate gradients. max_iter = 0 selects the default 10 * dim. Throws
/// SingularSystem on breakdown or when the residual does not reach
/// tol * ||rhs|| (for instance lambda = 0 with a Gram term whose kernel
/// contains the constant vectors, which makes the system inconsistent).
/// `warm` optionally seeds the iteration.
std::pair<Eigen::VectorXd, SolveReport> solve_regularized(
    const GramOperator& gram, const Eigen::VectorXd& rhs, double tol = 1e-10,
    int max_iter = 0, const Eigen::VectorXd* warm = nullptr);

/// Least-squares solution of the stacked system
///   [ K ; sqrt(lambda) Mt^{-1/2} A ] c = [ stacked_rhs ; 0 ]
/// (penalty rows per channel) via CGLS, i.e. conjugate gradients on the
/// normal equations without forming them; those normal equations are
/// exactly the regularized system above with a single unit-weight term.
/// The iteration converges to a least-squares solution even for
/// column-rank-deficient K (e.g. orthonormal-row K with s < d*kappa
/// yields the minimum-norm solution K^T rhs at lambda = 0);
/// SingularSystem is thrown only on stagnation or iteration exhaustion,
/// which is how ill-posed unregularized instances surface in practice.
std::pair<Eigen::VectorXd, SolveReport> solve_sparse_lsq(
    const ForwardOperator& op, double lambda, const FemSystem& fem,
    const Eigen::VectorXd& stacked_rhs, double tol = 1e-10, int max_iter = 0);

}  // namespace ipca
