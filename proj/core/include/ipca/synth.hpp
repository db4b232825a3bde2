#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ipca/covpca.hpp"
#include "ipca/funcpca.hpp"
#include "ipca/mesh.hpp"

namespace ipca::synth {

enum class OperatorKind { Identity, Gaussian, Smoothing };

struct MeshSource {
  std::string kind = "icosphere";  // "icosphere" or "file"
  int subdivisions = 2;
  double radius = 1.0;
  std::string path;
  std::string format = "off";  // off | csv | container
};

/// Synthetic experiment description. Serializes to/from JSON (unknown keys
/// rejected).
struct SynthSpec {
  std::string kind = "functional";  // "functional" or "covariance"
  MeshSource mesh;
  int channels = 1;
  int n_components = 3;
  std::vector<double> sigmas = {6.0, 3.0, 1.0};  // strictly decreasing > 0
  int sample_count = 50;                         // m (functional) or n (covariance)
  double noise_sigma = 0.0;
  OperatorKind op_kind = OperatorKind::Smoothing;
  int sensors = 60;
  double op_scale = 1.0;
  bool per_sample_operators = false;
  bool sensor_align = false;  // rotate the basis so operator images are orthogonal
  uint64_t seed = 0;
};

/// Throws InvalidConfig on violated invariants (sigmas not strictly
/// decreasing, negative noise, bad counts, alignment with per-sample
/// operators, identity operator with wrong sensor count).
void validate_synth_spec(const SynthSpec& spec, int fem_dim);

SynthSpec synth_spec_from_json(const std::string& json_text);
std::string synth_spec_to_json(const SynthSpec& spec);

TriMesh resolve_mesh(const MeshSource& source);

/// Smooth bump-mixture functions, one dominant channel per component,
/// centered at farthest-point-sampled nodes, then Gram-Schmidt
/// orthonormalized in the discrete L2 (mass-weighted) inner product.
std::vector<Eigen::VectorXd> make_orthonormal_basis(const TriMesh& mesh,
                                                    const FemSystem& fem, int count,
                                                    uint64_t seed);

/// Rotates an M-orthonormal basis within its span so that the sensor
/// images K psi_r become Euclidean-orthogonal (generalized eigenproblem in
/// the span), preserving M-orthonormality. Components come back sorted by
/// decreasing image norm. With this rotation a family sum_r g_ir psi_r (x)
/// psi_r maps to sensor covariances that commute, which makes the
/// rank-one population representation exact on noiseless data.
std::vector<Eigen::VectorXd> sensor_align_basis(const FemSystem& fem,
                                                const ForwardOperator& op,
                                                const std::vector<Eigen::VectorXd>& basis);

/// Synthetic forward operator: identity (sensors == d*kappa), seeded dense
/// Gaussian, or a smoothing operator whose rows are normalized
/// embedding-distance heat-kernel bumps around farthest-point sensor
/// sites with a random per-sensor channel direction. Rows have Euclidean
/// norm `scale` for the smoothing kind.
ForwardOperator make_operator(const TriMesh& mesh, const FemSystem& fem,
                              OperatorKind kind, int sensors, double scale,
                              uint64_t seed, const std::string& id = "K");

struct FunctionalTruth {
  Eigen::MatrixXd scores;              // m x R
  std::vector<Eigen::VectorXd> basis;  // components the data was built from
};

/// y_l = K_l (sum_r z_lr psi_r) + eps_l with z_lr ~ N(0, sigma_r^2) and
/// i.i.d. N(0, noise_sigma^2) sensor noise, all seeded.
std::pair<FunctionalDataset, FunctionalTruth> gen_functional_dataset(
    const TriMesh& mesh, const FemSystem& fem, const SynthSpec& spec,
    const std::vector<Eigen::VectorXd>& basis);

struct CovTruth {
  Eigen::MatrixXd variances;           // n x R, the generating z_ir^2
  std::vector<Eigen::VectorXd> basis;
};

/// S_i = sum_r z_ir^2 (K_i psi_r)(K_i psi_r)^T + E_i^T E_i, never
/// materializing the brain-space covariance.
std::pair<std::vector<CovSample>, CovTruth> gen_cov_dataset(
    const TriMesh& mesh, const FemSystem& fem, const SynthSpec& spec,
    const std::vector<Eigen::VectorXd>& basis);

/// Gradient-seminorm reconstruction error after optimal sign alignment
/// (by the sign of the M-inner product). Blind to constant offsets.
double fidelity_gradient_error(const FemSystem& fem, const Eigen::VectorXd& psi_true,
                               const Eigen::VectorXd& psi_hat);

/// Two-step comparison estimator: per-sample regularized inversion with
/// unit weight, then a dense SVD PCA of the reconstructed nodal data
/// matrix, returned in PcBasis shape (scores are left singular vectors,
/// coefficients sigma_r * v_r; residual norms live in nodal space).
PcBasis naive_two_step(const FunctionalDataset& data, const FemSystem& fem,
                       double lambda, int rank, const FitConfig& config = {});

}  // namespace ipca::synth
