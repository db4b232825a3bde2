#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ipca/fem.hpp"
#include "ipca/forward_operator.hpp"
#include "ipca/funcpca.hpp"

namespace ipca {

/// Sensor-space covariance sample: the s x s matrix, a cached square root
/// with S = sqrt^T * sqrt, and the sample's forward operator.
struct CovSample {
  Eigen::MatrixXd S;
  Eigen::MatrixXd sqrt;
  ForwardOperator op;
  std::string id;
  double clipped_mass = 0.0;  // |sum of clipped negative eigenvalues|
};

/// Square root via spectral decomposition: S = V D V^T gives D^{1/2} V^T,
/// rows playing the role of pseudo-observations. Negative eigenvalues
/// (noise) are clipped to zero; the clipped trace mass is reported through
/// `clipped_trace`. Throws NotSymmetric, and NotPSD when the clipping
/// would change S by more than 1e-8 * ||S||_F.
Eigen::MatrixXd sqrt_decompose(const Eigen::MatrixXd& S,
                               double* clipped_trace = nullptr);

/// Builds a validated sample (symmetry check, cached square root).
CovSample make_cov_sample(Eigen::MatrixXd S, ForwardOperator op, std::string id);

/// Builds a sample from a given s x s square-root factor; S is formed as
/// sqrt^T * sqrt. Used for raw-signal ingestion and for rotating square
/// roots without changing the covariance.
CovSample make_cov_sample_from_sqrt(Eigen::MatrixXd sqrt, ForwardOperator op,
                                    std::string id);

/// Population fit output. Stage r holds the common component f_r (raw
/// fitted scale), the per-sample score vectors z_ir (columns of scores[r],
/// sum_i ||z_ir||^2 = 1), and the per-sample variances in both
/// normalizations:
///   brain space   gamma_ir = ||z_ir||^2 * ||f_r||_M^2      (f_r unit M-norm)
///   sensors space gamma_ir = ||z_ir||^2 * ||K_i f_r||^2    (unit sensor image)
/// The two differ whenever parts of a component are invisible to the
/// operators.
struct CovPcResult {
  std::vector<Eigen::VectorXd> components;
  std::vector<Eigen::MatrixXd> scores;   // per stage: s x n
  Eigen::MatrixXd variances_brain;       // n x R
  Eigen::MatrixXd variances_sensor;      // n x R
  std::vector<double> component_m_norms; // ||f_r||_M
  double lambda = 0.0;
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<std::vector<double>> objective_traces;
  std::vector<double> residual_norms;    // global Frobenius residual per stage
  std::vector<double> sample_residuals;  // final per-sample Frobenius residuals

  int rank() const { return static_cast<int>(components.size()); }
  int sample_count() const { return static_cast<int>(variances_brain.rows()); }
};

/// Score update of the population model: z_i = S_i^{1/2} K_i c, normalized
/// globally so sum_i ||z_i||^2 = 1.
std::vector<Eigen::VectorXd> update_cov_scores(const std::vector<CovSample>& samples,
                                               const Eigen::VectorXd& c);

/// Component update of the population model:
///   (sum_i ||z_i||^2 K_i^T K_i + lambda P) c = sum_i K_i^T S_i^{T/2} z_i.
Eigen::VectorXd update_cov_component(const std::vector<CovSample>& samples,
                                     const FemSystem& fem,
                                     const std::vector<Eigen::VectorXd>& scores,
                                     double lambda, const FitConfig& config = {});

/// Population model: per stage, alternates the two updates from a
/// data-driven initialization, then deflates the square roots
/// S_i^{1/2} <- S_i^{1/2} - z_i (K_i c)^T. Stops early on rank exhaustion.
CovPcResult fit_population_cov(const std::vector<CovSample>& samples,
                               const FemSystem& fem, double lambda, int rank,
                               const FitConfig& config = {});

/// Subject-specific fit: the s rows of S^{1/2} are treated as a functional
/// dataset with the sample's operator (never centered) and passed through
/// fit_pca. `scores` stacks the per-stage unit score vectors; they are not
/// orthogonal under regularization, so a QR-orthonormalized copy is
/// returned alongside. variances_sensor[r] = ||K c_r||^2 (unit scores).
struct SubjectCovFit {
  PcBasis basis;
  Eigen::MatrixXd scores;            // s x R
  Eigen::MatrixXd scores_orthogonal; // s x R, QR factor
  Eigen::VectorXd variances_sensor;  // R
  Eigen::VectorXd variances_brain;   // R
};
SubjectCovFit fit_subject_cov(const CovSample& sample, const FemSystem& fem,
                              double lambda, int rank, const FitConfig& config = {});

/// Truncated rank-R' representation of one reconstructed brain-space
/// covariance: factor list (gamma_ir, unit-M f_r) plus an entry evaluator
/// over flat (d*kappa) indices. The dense matrix is never materialized.
class CovReconstruction {
 public:
  CovReconstruction(std::vector<double> weights, std::vector<Eigen::VectorXd> factors);

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& factors() const { return factors_; }

  double entry(int row, int col) const;
  int rank() const { return static_cast<int>(weights_.size()); }

 private:
  std::vector<double> weights_;
  std::vector<Eigen::VectorXd> factors_;
};

CovReconstruction reconstruct_cov(const CovPcResult& result, int sample_index,
                                  int truncation);

/// Per-node squared magnitude sum_q c_q(node)^2; length kappa.
Eigen::VectorXd energy_map(const FemSystem& fem, const Eigen::VectorXd& c);

}  // namespace ipca
