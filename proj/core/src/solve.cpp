#include "ipca/solve.hpp"

#include <cmath>

#include "ipca/parallel.hpp"

namespace ipca {

void GramOperator::validate() const {
  if (fem == nullptr) throw DimensionMismatch("GramOperator: missing FEM system");
  bool any_weight = lambda > 0.0;
  int sensors = -1;
  for (const auto& term : terms) {
    if (term.op == nullptr) throw DimensionMismatch("GramOperator: null operator");
    if (term.op->domain_dim() != dim()) {
      throw DimensionMismatch("GramOperator: operator domain " +
                              std::to_string(term.op->domain_dim()) +
                              " does not match FEM dim " + std::to_string(dim()));
    }
    if (sensors < 0) sensors = term.op->sensors();
    if (term.op->sensors() != sensors) {
      throw DimensionMismatch("GramOperator: mixed sensor dimensions");
    }
    if (term.weight < 0.0) throw DimensionMismatch("GramOperator: negative weight");
    any_weight = any_weight || term.weight > 0.0;
  }
  if (!any_weight) {
    throw SingularSystem("GramOperator: all weights zero and lambda = 0");
  }
}

Eigen::VectorXd GramOperator::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) {
    throw DimensionMismatch("GramOperator::apply: vector length " +
                            std::to_string(x.size()));
  }
  const int nterms = static_cast<int>(terms.size());
  std::vector<Eigen::VectorXd> slots(static_cast<size_t>(nterms));
  parallel_for(nterms, threads, [&](int l) {
    const auto& term = terms[static_cast<size_t>(l)];
    if (term.weight == 0.0) {
      slots[static_cast<size_t>(l)].setZero(x.size());
      return;
    }
    slots[static_cast<size_t>(l)] =
        term.weight * term.op->apply_adjoint(term.op->apply(x));
  });
  Eigen::VectorXd out = lambda > 0.0 ? (lambda * penalty_apply(*fem, x)).eval()
                                     : Eigen::VectorXd::Zero(x.size()).eval();
  for (const auto& slot : slots) out += slot;  // fixed order, deterministic
  return out;
}

Eigen::VectorXd GramOperator::diagonal() const {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim());
  for (const auto& term : terms) {
    if (term.weight == 0.0) continue;
    diag += term.weight * term.op->matrix.colwise().squaredNorm().transpose();
  }
  if (lambda > 0.0) diag += lambda * penalty_diagonal(*fem);
  return diag;
}

std::pair<Eigen::VectorXd, SolveReport> solve_regularized(
    const GramOperator& gram, const Eigen::VectorXd& rhs, double tol,
    int max_iter, const Eigen::VectorXd* warm) {
  gram.validate();
  if (rhs.size() != gram.dim()) {
    throw DimensionMismatch("solve_regularized: rhs length " +
                            std::to_string(rhs.size()) + ", expected " +
                            std::to_string(gram.dim()));
  }
  if (!(tol > 0.0)) throw DimensionMismatch("solve_regularized: tol must be > 0");
  if (max_iter <= 0) max_iter = 10 * gram.dim();

  SolveReport report;
  report.method = SolveMethod::CG;

  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    return {Eigen::VectorXd::Zero(gram.dim()), report};
  }

  Eigen::VectorXd diag = gram.diagonal();
  const double max_diag = diag.maxCoeff();
  Eigen::VectorXd inv_diag(diag.size());
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    inv_diag[i] = diag[i] > 1e-14 * max_diag ? 1.0 / diag[i] : 0.0;
  }

  Eigen::VectorXd x;
  Eigen::VectorXd r;
  if (warm != nullptr && warm->size() == gram.dim()) {
    x = *warm;
    r = rhs - gram.apply(x);
  } else {
    x = Eigen::VectorXd::Zero(gram.dim());
    r = rhs;
  }

  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  double rel = r.norm() / rhs_norm;

  int it = 0;
  while (rel > tol && it < max_iter) {
    const Eigen::VectorXd q = gram.apply(p);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      // PSD operator: a non-positive curvature direction means the Krylov
      // space hit the kernel with an inconsistent right-hand side.
      throw SingularSystem("solve_regularized: CG breakdown (p^T G p <= 0)");
    }
    const double alpha = rz / pq;
    x += alpha * p;
    ++it;
    if (it % 100 == 0) {
      r = rhs - gram.apply(x);  // refresh against drift on long runs
    } else {
      r -= alpha * q;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    p = z + beta * p;
    rz = rz_new;
    rel = r.norm() / rhs_norm;
  }

  report.iterations = it;
  report.relative_residual = rel;
  if (rel > tol) {
    throw SingularSystem("solve_regularized: no convergence after " +
                         std::to_string(it) + " iterations (relative residual " +
                         std::to_string(rel) + ")");
  }
  return {x, report};
}

namespace {

// Stacked operator of the least-squares formulation.
struct StackedOp {
  const ForwardOperator* op;
  const FemSystem* fem;
  double sqrt_lambda;

  // rows: s sensor rows then dim penalty rows
  Eigen::VectorXd apply(const Eigen::VectorXd& c) const {
    Eigen::VectorXd out(op->sensors() + fem->dim());
    out.head(op->sensors()) = op->apply(c);
    if (sqrt_lambda > 0.0) {
      const int k = fem->nodes;
      const Eigen::ArrayXd root_lumped = fem->lumped_mass.array().sqrt();
      for (int q = 0; q < fem->channels; ++q) {
        const Eigen::VectorXd ac = fem->stiffness * c.segment(q * k, k);
        out.segment(op->sensors() + q * k, k) =
            sqrt_lambda * (ac.array() / root_lumped).matrix();
      }
    } else {
      out.tail(fem->dim()).setZero();
    }
    return out;
  }

  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out = op->apply_adjoint(u.head(op->sensors()));
    if (sqrt_lambda > 0.0) {
      const int k = fem->nodes;
      const Eigen::ArrayXd root_lumped = fem->lumped_mass.array().sqrt();
      for (int q = 0; q < fem->channels; ++q) {
        const Eigen::VectorXd v = (u.segment(op->sensors() + q * k, k).array() /
                                   root_lumped).matrix();
        out.segment(q * k, k) += sqrt_lambda * (sys_stiffness() * v);
      }
    }
    return out;
  }

  const Eigen::SparseMatrix<double>& sys_stiffness() const { return fem->stiffness; }
};

}  // namespace

std::pair<Eigen::VectorXd, SolveReport> solve_sparse_lsq(
    const ForwardOperator& op, double lambda, const FemSystem& fem,
    const Eigen::VectorXd& stacked_rhs, double tol, int max_iter) {
  if (op.domain_dim() != fem.dim()) {
    throw DimensionMismatch("solve_sparse_lsq: operator domain " +
                            std::to_string(op.domain_dim()) + " vs FEM dim " +
                            std::to_string(fem.dim()));
  }
  if (stacked_rhs.size() != op.sensors()) {
    throw DimensionMismatch("solve_sparse_lsq: rhs length " +
                            std::to_string(stacked_rhs.size()) + ", expected " +
                            std::to_string(op.sensors()));
  }
  if (lambda < 0.0) throw DimensionMismatch("solve_sparse_lsq: lambda must be >= 0");
  if (!(tol > 0.0)) throw DimensionMismatch("solve_sparse_lsq: tol must be > 0");
  if (max_iter <= 0) max_iter = 10 * fem.dim();

  SolveReport report;
  report.method = SolveMethod::SparseLSQ;

  const StackedOp stacked{&op, &fem, std::sqrt(lambda)};

  Eigen::VectorXd b(op.sensors() + fem.dim());
  b.head(op.sensors()) = stacked_rhs;
  b.tail(fem.dim()).setZero();

  // CGLS: CG on B^T B x = B^T b, tracked through B applications.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(fem.dim());
  Eigen::VectorXd r = b;
  Eigen::VectorXd s = stacked.apply_adjoint(r);
  const double s0_norm = s.norm();
  if (s0_norm == 0.0) return {x, report};

  Eigen::VectorXd p = s;
  double gamma = s.squaredNorm();
  int it = 0;
  double rel = 1.0;
  while (rel > tol && it < max_iter) {
    const Eigen::VectorXd q = stacked.apply(p);
    const double qq = q.squaredNorm();
    if (!(qq > 0.0)) {
      throw SingularSystem("solve_sparse_lsq: CGLS breakdown (||Bp|| = 0)");
    }
    const double alpha = gamma / qq;
    x += alpha * p;
    r -= alpha * q;
    s = stacked.apply_adjoint(r);
    const double gamma_new = s.squaredNorm();
    const double beta = gamma_new / gamma;
    p = s + beta * p;
    gamma = gamma_new;
    ++it;
    rel = std::sqrt(gamma) / s0_norm;
  }

  report.iterations = it;
  report.relative_residual = rel;
  if (rel > tol) {
    throw SingularSystem("solve_sparse_lsq: no convergence after " +
                         std::to_string(it) + " iterations (relative residual " +
                         std::to_string(rel) + ")");
  }
  return {x, report};
}

}  // namespace ipca
