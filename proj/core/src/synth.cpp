#include "ipca/synth.hpp"

#include <cmath>

#include "ipca/rng.hpp"
#include "ipca/solve.hpp"

namespace ipca::synth {

namespace {

constexpr double kBumpWidthRel = 0.25;    // bump width / sqrt(total area)
constexpr double kSmoothWidthRel = 0.25;  // heat-kernel width / sqrt(total area)

// Farthest-point sampling of node indices in embedding distance; the
// first site is drawn from the rng.
std::vector<int> farthest_point_sites(const TriMesh& mesh, int count, Rng& rng) {
  const int kappa = mesh.node_count();
  std::vector<int> sites;
  sites.reserve(static_cast<size_t>(count));
  sites.push_back(rng.uniform_int(kappa));
  Eigen::VectorXd dist(kappa);
  for (int j = 0; j < kappa; ++j) {
    dist[j] = (mesh.nodes()[j] - mesh.nodes()[sites[0]]).norm();
  }
  while (static_cast<int>(sites.size()) < count) {
    int far = 0;
    dist.maxCoeff(&far);
    sites.push_back(far);
    for (int j = 0; j < kappa; ++j) {
      dist[j] = std::min(dist[j], (mesh.nodes()[j] - mesh.nodes()[far]).norm());
    }
  }
  return sites;
}

Eigen::VectorXd gaussian_bump(const TriMesh& mesh, int center, double width) {
  const int kappa = mesh.node_count();
  Eigen::VectorXd bump(kappa);
  const Eigen::Vector3d& c = mesh.nodes()[center];
  for (int j = 0; j < kappa; ++j) {
    const double d = (mesh.nodes()[j] - c).norm();
    bump[j] = std::exp(-d * d / (2.0 * width * width));
  }
  return bump;
}

}  // namespace

void validate_synth_spec(const SynthSpec& spec, int fem_dim) {
  if (spec.kind != "functional" && spec.kind != "covariance") {
    throw InvalidConfig("synth kind must be 'functional' or 'covariance'");
  }
  if (spec.channels < 1) throw InvalidConfig("channels must be >= 1");
  if (spec.n_components < 1) throw InvalidConfig("n_components must be >= 1");
  if (static_cast<int>(spec.sigmas.size()) != spec.n_components) {
    throw InvalidConfig("sigmas must have n_components entries");
  }
  for (size_t r = 0; r < spec.sigmas.size(); ++r) {
    if (!(spec.sigmas[r] > 0.0)) throw InvalidConfig("sigmas must be > 0");
    if (r > 0 && !(spec.sigmas[r] < spec.sigmas[r - 1])) {
      throw InvalidConfig("sigmas must be strictly decreasing");
    }
  }
  if (spec.sample_count < 1) throw InvalidConfig("sample_count must be >= 1");
  if (spec.noise_sigma < 0.0) throw InvalidConfig("noise_sigma must be >= 0");
  if (spec.sensors < 1) throw InvalidConfig("sensors must be >= 1");
  if (!(spec.op_scale > 0.0)) throw InvalidConfig("op_scale must be > 0");
  if (spec.op_kind == OperatorKind::Identity && spec.sensors != fem_dim) {
    throw InvalidConfig("identity operator requires sensors == d*kappa = " +
                        std::to_string(fem_dim));
  }
  if (spec.sensor_align && spec.per_sample_operators) {
    throw InvalidConfig("sensor_align requires a shared operator");
  }
}

TriMesh resolve_mesh(const MeshSource& source) {
  if (source.kind == "icosphere") {
    return make_icosphere(source.subdivisions, source.radius);
  }
  if (source.kind == "file") {
    MeshFormat format;
    if (source.format == "off") {
      format = MeshFormat::Off;
    } else if (source.format == "csv") {
      format = MeshFormat::CsvPair;
    } else if (source.format == "container") {
      format = MeshFormat::Container;
    } else {
      throw InvalidConfig("unknown mesh format '" + source.format + "'");
    }
    return load_mesh(source.path, format);
  }
  throw InvalidConfig("unknown mesh source kind '" + source.kind + "'");
}

std::vector<Eigen::VectorXd> make_orthonormal_basis(const TriMesh& mesh,
                                                    const FemSystem& fem, int count,
                                                    uint64_t seed) {
  if (count < 1 || count > fem.dim()) {
    throw DimensionMismatch("basis count must be in [1, d*kappa]");
  }
  Rng rng(seed);
  const double width = kBumpWidthRel * std::sqrt(mesh.total_area());
  const std::vector<int> sites = farthest_point_sites(mesh, count, rng);

  std::vector<Eigen::VectorXd> basis;
  basis.reserve(static_cast<size_t>(count));
  for (int r = 0; r < count; ++r) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(fem.dim());
    const int channel = r % fem.channels;
    f.segment(channel * fem.nodes, fem.nodes) = gaussian_bump(mesh, sites[r], width);

    // mass-weighted Gram-Schmidt against the previous components
    const double pre_norm = m_norm(fem, f);
    for (const auto& prev : basis) f -= l2_inner(fem, f, prev) * prev;
    const double post_norm = m_norm(fem, f);
    if (!(post_norm > 1e-10 * pre_norm)) {
      throw RankDeficientBasis("orthogonalization breakdown at component " +
                               std::to_string(r));
    }
    f /= post_norm;
    basis.push_back(std::move(f));
  }
  return basis;
}

std::vector<Eigen::VectorXd> sensor_align_basis(const FemSystem& fem,
                                                const ForwardOperator& op,
                                                const std::vector<Eigen::VectorXd>& basis) {
  const int count = static_cast<int>(basis.size());
  if (count == 0) return {};

  // images and their Gram matrix within the span
  Eigen::MatrixXd image_gram(count, count);
  std::vector<Eigen::VectorXd> images;
  images.reserve(basis.size());
  for (const auto& f : basis) images.push_back(op.apply(f));
  for (int a = 0; a < count; ++a) {
    for (int b = 0; b < count; ++b) image_gram(a, b) = images[a].dot(images[b]);
  }

  // basis is M-orthonormal, so the span's mass Gram is the identity and
  // the generalized problem reduces to a plain symmetric eigenproblem
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(image_gram);

  std::vector<Eigen::VectorXd> rotated;
  rotated.reserve(basis.size());
  for (int r = count - 1; r >= 0; --r) {  // descending image norm
    Eigen::VectorXd f = Eigen::VectorXd::Zero(fem.dim());
    for (int a = 0; a < count; ++a) f += eig.eigenvectors()(a, r) * basis[a];
    if (f.sum() < 0.0) f = -f;
    rotated.push_back(std::move(f));
  }
  return rotated;
}

ForwardOperator make_operator(const TriMesh& mesh, const FemSystem& fem,
                              OperatorKind kind, int sensors, double scale,
                              uint64_t seed, const std::string& id) {
  ForwardOperator op;
  op.id = id;
  switch (kind) {
    case OperatorKind::Identity: {
      if (sensors != fem.dim()) {
        throw DimensionMismatch("identity operator requires sensors == d*kappa");
      }
      op.matrix = scale * Eigen::MatrixXd::Identity(sensors, fem.dim());
      return op;
    }
    case OperatorKind::Gaussian: {
      Rng rng(seed);
      op.matrix.resize(sensors, fem.dim());
      const double stddev = scale / std::sqrt(double(fem.dim()));
      for (int i = 0; i < sensors; ++i) {
        for (int j = 0; j < fem.dim(); ++j) op.matrix(i, j) = rng.normal(0.0, stddev);
      }
      return op;
    }
    case OperatorKind::Smoothing: {
      Rng rng(seed);
      const double width = kSmoothWidthRel * std::sqrt(mesh.total_area());
      const std::vector<int> sites = farthest_point_sites(mesh, sensors, rng);
      op.matrix.resize(sensors, fem.dim());
      for (int i = 0; i < sensors; ++i) {
        Eigen::VectorXd kernel = gaussian_bump(mesh, sites[i], width);
        kernel /= kernel.norm();
        // random unit channel direction, the sensor's orientation sensitivity
        Eigen::VectorXd direction(fem.channels);
        for (int q = 0; q < fem.channels; ++q) direction[q] = rng.normal();
        direction /= direction.norm();
        for (int q = 0; q < fem.channels; ++q) {
          op.matrix.row(i).segment(q * fem.nodes, fem.nodes) =
              scale * direction[q] * kernel.transpose();
        }
      }
      return op;
    }
  }
  throw InvalidConfig("unknown operator kind");
}

std::pair<FunctionalDataset, FunctionalTruth> gen_functional_dataset(
    const TriMesh& mesh, const FemSystem& fem, const SynthSpec& spec,
    const std::vector<Eigen::VectorXd>& basis) {
  validate_synth_spec(spec, fem.dim());
  if (static_cast<int>(basis.size()) != spec.n_components) {
    throw DimensionMismatch("basis size does not match n_components");
  }
  for (const auto& f : basis) {
    if (f.size() != fem.dim()) throw DimensionMismatch("basis component length");
  }

  const int m = spec.sample_count;
  const int rank = spec.n_components;
  Rng rng(spec.seed);

  FunctionalTruth truth;
  truth.basis = basis;
  truth.scores.resize(m, rank);
  for (int l = 0; l < m; ++l) {
    for (int r = 0; r < rank; ++r) {
      truth.scores(l, r) = rng.normal(0.0, spec.sigmas[static_cast<size_t>(r)]);
    }
  }

  FunctionalDataset data;
  if (spec.per_sample_operators) {
    data.operators.reserve(static_cast<size_t>(m));
    for (int l = 0; l < m; ++l) {
      data.operators.push_back(make_operator(mesh, fem, spec.op_kind, spec.sensors,
                                             spec.op_scale, spec.seed + 1000 + l,
                                             "K" + std::to_string(l)));
    }
  } else {
    data.operators = {make_operator(mesh, fem, spec.op_kind, spec.sensors,
                                    spec.op_scale, spec.seed + 1000, "K")};
  }

  data.observations.resize(m, spec.sensors);
  for (int l = 0; l < m; ++l) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(fem.dim());
    for (int r = 0; r < rank; ++r) x += truth.scores(l, r) * basis[static_cast<size_t>(r)];
    Eigen::VectorXd y = data.op(l).apply(x);
    for (int i = 0; i < spec.sensors; ++i) y[i] += rng.normal(0.0, spec.noise_sigma);
    data.observations.row(l) = y.transpose();
  }
  return {std::move(data), std::move(truth)};
}

std::pair<std::vector<CovSample>, CovTruth> gen_cov_dataset(
    const TriMesh& mesh, const FemSystem& fem, const SynthSpec& spec,
    const std::vector<Eigen::VectorXd>& basis) {
  validate_synth_spec(spec, fem.dim());
  if (static_cast<int>(basis.size()) != spec.n_components) {
    throw DimensionMismatch("basis size does not match n_components");
  }

  const int n = spec.sample_count;
  const int rank = spec.n_components;
  const int s = spec.sensors;
  Rng rng(spec.seed);

  CovTruth truth;
  truth.basis = basis;
  truth.variances.resize(n, rank);
  Eigen::MatrixXd scores(n, rank);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < rank; ++r) {
      scores(i, r) = rng.normal(0.0, spec.sigmas[static_cast<size_t>(r)]);
      truth.variances(i, r) = scores(i, r) * scores(i, r);
    }
  }

  std::vector<ForwardOperator> ops;
  if (spec.per_sample_operators) {
    ops.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      ops.push_back(make_operator(mesh, fem, spec.op_kind, s, spec.op_scale,
                                  spec.seed + 1000 + i, "K" + std::to_string(i)));
    }
  } else {
    ops.assign(static_cast<size_t>(n),
               make_operator(mesh, fem, spec.op_kind, s, spec.op_scale,
                             spec.seed + 1000, "K"));
  }

  std::vector<CovSample> samples;
  samples.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(s, s);
    for (int r = 0; r < rank; ++r) {
      const Eigen::VectorXd image = ops[static_cast<size_t>(i)].apply(basis[static_cast<size_t>(r)]);
      S += truth.variances(i, r) * (image * image.transpose());
    }
    if (spec.noise_sigma > 0.0) {
      Eigen::MatrixXd E(s, s);
      for (int a = 0; a < s; ++a) {
        for (int b = 0; b < s; ++b) E(a, b) = rng.normal(0.0, spec.noise_sigma);
      }
      S += E.transpose() * E;
    }
    S = ((S + S.transpose()) / 2.0).eval();
    samples.push_back(make_cov_sample(std::move(S), ops[static_cast<size_t>(i)],
                                      "sample" + std::to_string(i)));
  }
  return {std::move(samples), std::move(truth)};
}

double fidelity_gradient_error(const FemSystem& fem, const Eigen::VectorXd& psi_true,
                               const Eigen::VectorXd& psi_hat) {
  if (psi_true.size() != psi_hat.size()) {
    throw DimensionMismatch("fidelity_gradient_error: length mismatch");
  }
  const double sign = l2_inner(fem, psi_true, psi_hat) >= 0.0 ? 1.0 : -1.0;
  return gradient_energy(fem, (psi_true - sign * psi_hat).eval());
}

PcBasis naive_two_step(const FunctionalDataset& data, const FemSystem& fem,
                       double lambda, int rank, const FitConfig& config) {
  data.validate(fem);
  if (rank < 1) throw DimensionMismatch("naive_two_step: rank must be >= 1");

  const int m = data.samples();
  Eigen::MatrixXd reconstructed(m, fem.dim());
  for (int l = 0; l < m; ++l) {
    GramOperator gram;
    gram.fem = &fem;
    gram.lambda = lambda;
    gram.threads = config.threads;
    gram.terms.push_back({1.0, &data.op(l)});
    const Eigen::VectorXd rhs =
        data.op(l).apply_adjoint(data.observations.row(l).transpose());
    auto [x, report] = solve_regularized(gram, rhs, config.solver_tol,
                                         config.solver_max_iter);
    (void)report;
    reconstructed.row(l) = x.transpose();
  }

  if (config.center && m >= 2) {
    reconstructed.rowwise() -= reconstructed.colwise().mean();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(reconstructed,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& singular = svd.singularValues();

  PcBasis basis;
  const int available = static_cast<int>(singular.size());
  for (int r = 0; r < rank && r < available; ++r) {
    if (singular[r] < 1e-12 * singular[0]) break;
    PcComponent component;
    component.lambda = lambda;
    component.iterations = 1;
    component.converged = true;
    component.sign_convention = "score-sum-positive";
    Eigen::VectorXd u = svd.matrixU().col(r);
    const double sign = u.sum() >= 0.0 ? 1.0 : -1.0;
    component.scores = sign * u;
    component.coefficients = sign * singular[r] * svd.matrixV().col(r);
    double tail = 0.0;
    for (int k = r + 1; k < available; ++k) tail += singular[k] * singular[k];
    basis.residual_norms.push_back(std::sqrt(tail));
    basis.components.push_back(std::move(component));
  }
  return basis;
}

}  // namespace ipca::synth
