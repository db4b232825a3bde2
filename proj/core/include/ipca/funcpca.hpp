#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ipca/fem.hpp"
#include "ipca/forward_operator.hpp"
#include "ipca/solve.hpp"

namespace ipca {

/// Indirectly observed functional samples: m sensor vectors y_l (rows of
/// `observations`) with either one shared forward operator or one per
/// sample.
struct FunctionalDataset {
  Eigen::MatrixXd observations;           // m x s, row l is y_l^T
  std::vector<ForwardOperator> operators; // size 1 or m

  int samples() const { return static_cast<int>(observations.rows()); }
  int sensors() const { return static_cast<int>(observations.cols()); }
  bool shared_operator() const { return operators.size() == 1; }
  const ForwardOperator& op(int l) const {
    return operators[shared_operator() ? 0 : static_cast<size_t>(l)];
  }

  void validate(const FemSystem& fem) const;
};

enum class ScoreInit { DataSvd, Uniform };

struct FitConfig {
  int max_outer = 15;          // outer alternation iterations
  double tol = 1e-6;           // relative M-norm change of the component
  bool center = true;          // subtract the per-sensor empirical mean
  bool use_sparse_lsq = false; // route shared-operator updates through the
                               // stacked least-squares path
  double solver_tol = 1e-10;   // inner solver, much tighter than `tol`
  int solver_max_iter = 0;     // 0 selects 10 * (d * kappa)
  ScoreInit init = ScoreInit::DataSvd;
  int threads = 1;
};

/// One estimated principal component: nodal coefficients of the fitted
/// function, unit-norm score vector, and convergence metadata. The sign
/// representative has positive score sum (tie: positive first nonzero
/// score); covariance-only fits, which have no per-sample scores, apply
/// the same rule to the coefficient vector instead.
struct PcComponent {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd scores;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string sign_convention;
  std::vector<double> objective_trace;  // one value per outer iteration
};

struct PcBasis {
  std::vector<PcComponent> components;
  std::vector<double> residual_norms;  // Frobenius data residual after each stage
};

/// Score update: z_l proportional to y_l^T K_l c, normalized so that
/// ||z|| = 1 exactly. Throws DegenerateComponent when every projection
/// vanishes (relative to the data and image scales).
Eigen::VectorXd update_scores(const FunctionalDataset& data, const FemSystem& fem,
                              const Eigen::VectorXd& c);

/// Component update: solves
///   (sum_l z_l^2 K_l^T K_l + lambda P) c = sum_l z_l K_l^T y_l
/// through the conjugate-gradient path, or through the stacked sparse
/// least-squares path when the operator is shared and the config flag is
/// set. `warm` optionally seeds the solver.
Eigen::VectorXd update_component(const FunctionalDataset& data, const FemSystem& fem,
                                 const Eigen::VectorXd& z, double lambda,
                                 const FitConfig& config = {},
                                 const Eigen::VectorXd* warm = nullptr);

/// Alternates the two updates from a data-driven initial score vector
/// until the relative M-norm change of the component drops below
/// config.tol or config.max_outer is reached. The recorded objective
/// trace is non-increasing. No centering happens here; see fit_pca.
PcComponent fit_pc(const FunctionalDataset& data, const FemSystem& fem,
                   double lambda, const FitConfig& config = {});

/// Residual dataset y_l - z_l K_l c; operators unchanged.
FunctionalDataset deflate(const FunctionalDataset& data, const PcComponent& component);

/// Multi-component driver: optional centering (skipped when m < 2), then
/// rank stages of fit_pc + deflate. Extraction stops early when the data
/// rank is exhausted (residual below 1e-12 of the original norm, or a
/// degenerate score update past the first stage); the returned basis then
/// carries fewer than `rank` components.
PcBasis fit_pca(const FunctionalDataset& data, const FemSystem& fem, double lambda,
                int rank, const FitConfig& config = {});

/// Covariance-only variant: power-like iteration
///   (K^T K + lambda P) c_next = K^T S K c,   c normalized in M-norm,
/// which shares its fixed points with fit_pc when S = sum_l y_l y_l^T.
/// With isotropic S and unregularized identity operators every direction
/// is fixed, and the iteration returns its (deterministic) initialization.
/// Components are extracted stagewise; deflation projects the sensor
/// covariance off the fitted image direction. Score vectors are empty.
PcBasis fit_from_sensor_cov(const Eigen::MatrixXd& sensor_cov,
                            const ForwardOperator& op, const FemSystem& fem,
                            double lambda, int rank, const FitConfig& config = {});

/// Eq-like objective of one component: sum_l ||y_l - z_l K_l c||^2 +
/// lambda * ||z||^2 * penalty_quadform(c).
double component_objective(const FunctionalDataset& data, const FemSystem& fem,
                           const Eigen::VectorXd& z, const Eigen::VectorXd& c,
                           double lambda);

}  // namespace ipca
