#include "ipca/covpca.hpp"

#include <cmath>

#include "ipca/log.hpp"
#include "ipca/parallel.hpp"
#include "ipca/solve.hpp"

namespace ipca {

namespace {

constexpr double kRankExhausted = 1e-12;

double stacked_sign(const std::vector<Eigen::VectorXd>& scores) {
  double total = 0.0;
  for (const auto& z : scores) total += z.sum();
  if (total > 0.0) return 1.0;
  if (total < 0.0) return -1.0;
  for (const auto& z : scores) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z[i] != 0.0) return z[i] > 0.0 ? 1.0 : -1.0;
    }
  }
  return 1.0;
}

void validate_samples(const std::vector<CovSample>& samples, const FemSystem* fem) {
  if (samples.empty()) throw DimensionMismatch("no covariance samples");
  const auto s = samples.front().S.rows();
  for (const auto& sample : samples) {
    if (sample.S.rows() != s || sample.S.cols() != s ||
        sample.sqrt.rows() != s || sample.sqrt.cols() != s) {
      throw DimensionMismatch("covariance sample '" + sample.id +
                              "' has inconsistent dimensions");
    }
    if (sample.op.sensors() != s) {
      throw DimensionMismatch("sample '" + sample.id + "' operator has " +
                              std::to_string(sample.op.sensors()) +
                              " sensors, covariance is " + std::to_string(s) + "x" +
                              std::to_string(s));
    }
    if (fem != nullptr && sample.op.domain_dim() != fem->dim()) {
      throw DimensionMismatch("sample '" + sample.id + "' operator domain " +
                              std::to_string(sample.op.domain_dim()) +
                              " vs FEM dim " + std::to_string(fem->dim()));
    }
  }
}

// Internal fit state: deflated square roots alongside their operators.
struct SqrtViews {
  std::vector<Eigen::MatrixXd> sqrts;
  std::vector<const ForwardOperator*> ops;

  int count() const { return static_cast<int>(sqrts.size()); }
  double frobenius() const {
    double total = 0.0;
    for (const auto& m : sqrts) total += m.squaredNorm();
    return std::sqrt(total);
  }
};

std::vector<Eigen::VectorXd> scores_impl(const SqrtViews& views,
                                         const Eigen::VectorXd& c) {
  const int n = views.count();
  std::vector<Eigen::VectorXd> raw(static_cast<size_t>(n));
  double total_sq = 0.0;
  double image_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd image = views.ops[static_cast<size_t>(i)]->apply(c);
    raw[static_cast<size_t>(i)] = views.sqrts[static_cast<size_t>(i)] * image;
    total_sq += raw[static_cast<size_t>(i)].squaredNorm();
    image_sq += image.squaredNorm();
  }
  const double norm = std::sqrt(total_sq);
  const double scale = views.frobenius() * std::sqrt(image_sq / double(n));
  if (norm == 0.0 || norm < 1e-14 * scale) {
    throw DegenerateComponent("update_cov_scores: all projections vanish");
  }
  for (auto& z : raw) z /= norm;
  return raw;
}

Eigen::VectorXd component_impl(const SqrtViews& views, const FemSystem& fem,
                               const std::vector<Eigen::VectorXd>& scores,
                               double lambda, const FitConfig& config,
                               const Eigen::VectorXd* warm) {
  const int n = views.count();
  if (static_cast<int>(scores.size()) != n) {
    throw DimensionMismatch("update_cov_component: score list size " +
                            std::to_string(scores.size()) + " vs n = " +
                            std::to_string(n));
  }
  GramOperator gram;
  gram.fem = &fem;
  gram.lambda = lambda;
  gram.threads = config.threads;
  gram.terms.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    gram.terms.push_back(
        {scores[static_cast<size_t>(i)].squaredNorm(), views.ops[static_cast<size_t>(i)]});
  }
  std::vector<Eigen::VectorXd> slots(static_cast<size_t>(n));
  parallel_for(n, config.threads, [&](int i) {
    slots[static_cast<size_t>(i)] = views.ops[static_cast<size_t>(i)]->apply_adjoint(
        views.sqrts[static_cast<size_t>(i)].transpose() * scores[static_cast<size_t>(i)]);
  });
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(fem.dim());
  for (const auto& slot : slots) rhs += slot;

  auto [c, report] = solve_regularized(gram, rhs, config.solver_tol,
                                       config.solver_max_iter, warm);
  (void)report;
  return c;
}

double objective_impl(const SqrtViews& views, const FemSystem& fem,
                      const std::vector<Eigen::VectorXd>& scores,
                      const Eigen::VectorXd& c, double lambda) {
  double fit = 0.0;
  double score_sq = 0.0;
  for (int i = 0; i < views.count(); ++i) {
    const Eigen::VectorXd image = views.ops[static_cast<size_t>(i)]->apply(c);
    fit += (views.sqrts[static_cast<size_t>(i)] -
            scores[static_cast<size_t>(i)] * image.transpose())
               .squaredNorm();
    score_sq += scores[static_cast<size_t>(i)].squaredNorm();
  }
  return fit + lambda * score_sq * penalty_quadform(fem, c);
}

std::vector<Eigen::VectorXd> initial_cov_scores(const SqrtViews& views) {
  const auto s = views.sqrts.front().cols();
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(s, s);
  for (const auto& m : views.sqrts) pooled += m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pooled);
  const Eigen::VectorXd lead = eig.eigenvectors().col(s - 1);

  const int n = views.count();
  std::vector<Eigen::VectorXd> z(static_cast<size_t>(n));
  double total_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    z[static_cast<size_t>(i)] = views.sqrts[static_cast<size_t>(i)] * lead;
    total_sq += z[static_cast<size_t>(i)].squaredNorm();
  }
  if (total_sq == 0.0 ||
      std::sqrt(total_sq) < 1e-14 * views.frobenius()) {
    throw DegenerateComponent("fit_population_cov: initialization vanishes");
  }
  const double scale = stacked_sign(z) / std::sqrt(total_sq);
  for (auto& zi : z) zi *= scale;
  return z;
}

}  // namespace

Eigen::MatrixXd sqrt_decompose(const Eigen::MatrixXd& S, double* clipped_trace) {
  if (S.rows() != S.cols()) {
    throw NotSymmetric("sqrt_decompose: matrix is " + std::to_string(S.rows()) + "x" +
                       std::to_string(S.cols()));
  }
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NotSymmetric("sqrt_decompose: matrix not symmetric within 1e-10");
  }
  const Eigen::MatrixXd sym = (S + S.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);

  double trace_mass = 0.0;
  double frob_sq = 0.0;
  Eigen::VectorXd values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) {
      trace_mass += -values[i];
      frob_sq += values[i] * values[i];
      values[i] = 0.0;
    }
  }
  if (clipped_trace != nullptr) *clipped_trace = trace_mass;
  if (std::sqrt(frob_sq) > 1e-8 * sym.norm()) {
    throw NotPSD("sqrt_decompose: negative spectrum beyond clip tolerance (" +
                 std::to_string(std::sqrt(frob_sq)) + " vs ||S||_F " +
                 std::to_string(sym.norm()) + ")");
  }
  return values.array().sqrt().matrix().asDiagonal() * eig.eigenvectors().transpose();
}

CovSample make_cov_sample(Eigen::MatrixXd S, ForwardOperator op, std::string id) {
  CovSample sample;
  sample.sqrt = sqrt_decompose(S, &sample.clipped_mass);
  sample.S = std::move(S);
  sample.op = std::move(op);
  sample.id = std::move(id);
  validate_samples({sample}, nullptr);
  return sample;
}

CovSample make_cov_sample_from_sqrt(Eigen::MatrixXd sqrt, ForwardOperator op,
                                    std::string id) {
  if (sqrt.rows() != sqrt.cols()) {
    throw DimensionMismatch("square-root factor must be s x s");
  }
  CovSample sample;
  sample.S = sqrt.transpose() * sqrt;
  sample.sqrt = std::move(sqrt);
  sample.op = std::move(op);
  sample.id = std::move(id);
  validate_samples({sample}, nullptr);
  return sample;
}

std::vector<Eigen::VectorXd> update_cov_scores(const std::vector<CovSample>& samples,
                                               const Eigen::VectorXd& c) {
  validate_samples(samples, nullptr);
  SqrtViews views;
  for (const auto& sample : samples) {
    views.sqrts.push_back(sample.sqrt);
    views.ops.push_back(&sample.op);
  }
  return scores_impl(views, c);
}

Eigen::VectorXd update_cov_component(const std::vector<CovSample>& samples,
                                     const FemSystem& fem,
                                     const std::vector<Eigen::VectorXd>& scores,
                                     double lambda, const FitConfig& config) {
  validate_samples(samples, &fem);
  SqrtViews views;
  for (const auto& sample : samples) {
    views.sqrts.push_back(sample.sqrt);
    views.ops.push_back(&sample.op);
  }
  return component_impl(views, fem, scores, lambda, config, nullptr);
}

CovPcResult fit_population_cov(const std::vector<CovSample>& samples,
                               const FemSystem& fem, double lambda, int rank,
                               const FitConfig& config) {
  if (rank < 1) throw DimensionMismatch("fit_population_cov: rank must be >= 1");
  if (lambda < 0.0) throw DimensionMismatch("fit_population_cov: lambda >= 0");
  validate_samples(samples, &fem);

  const int n = static_cast<int>(samples.size());
  const auto s = samples.front().S.rows();

  SqrtViews views;
  for (const auto& sample : samples) {
    views.sqrts.push_back(sample.sqrt);
    views.ops.push_back(&sample.op);
  }

  CovPcResult result;
  result.lambda = lambda;
  result.variances_brain.resize(n, 0);
  result.variances_sensor.resize(n, 0);

  const double original_norm = views.frobenius();

  for (int r = 0; r < rank; ++r) {
    if (views.frobenius() < kRankExhausted * original_norm) {
      log_info("fit_population_cov: rank exhausted after " + std::to_string(r) +
               " stages");
      break;
    }

    std::vector<Eigen::VectorXd> z;
    try {
      z = initial_cov_scores(views);
    } catch (const DegenerateComponent&) {
      if (r == 0) throw;
      break;
    }

    Eigen::VectorXd c;
    std::vector<double> trace;
    bool converged = false;
    int it = 0;
    try {
      while (it < config.max_outer) {
        const Eigen::VectorXd c_prev = c;
        c = component_impl(views, fem, z, lambda, config,
                           c.size() > 0 ? &c : nullptr);
        z = scores_impl(views, c);
        ++it;
        trace.push_back(objective_impl(views, fem, z, c, lambda));
        if (c_prev.size() > 0) {
          const double denom = m_norm(fem, c_prev);
          const double change = m_norm(fem, (c - c_prev).eval());
          if (denom > 0.0 && change / denom < config.tol) {
            converged = true;
            break;
          }
        }
      }
    } catch (const DegenerateComponent&) {
      if (r == 0) throw;
      break;
    }

    const double sign = stacked_sign(z);
    c *= sign;
    for (auto& zi : z) zi *= sign;

    // variances in both normalizations
    const double nu = m_norm(fem, c);
    result.variances_brain.conservativeResize(n, r + 1);
    result.variances_sensor.conservativeResize(n, r + 1);
    Eigen::MatrixXd score_mat(s, n);
    for (int i = 0; i < n; ++i) {
      const double score_sq = z[static_cast<size_t>(i)].squaredNorm();
      result.variances_brain(i, r) = score_sq * nu * nu;
      result.variances_sensor(i, r) =
          score_sq * views.ops[static_cast<size_t>(i)]->apply(c).squaredNorm();
      score_mat.col(i) = z[static_cast<size_t>(i)];
    }

    // deflate the square roots
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd image = views.ops[static_cast<size_t>(i)]->apply(c);
      views.sqrts[static_cast<size_t>(i)] -=
          z[static_cast<size_t>(i)] * image.transpose();
    }

    result.components.push_back(std::move(c));
    result.scores.push_back(std::move(score_mat));
    result.component_m_norms.push_back(nu);
    result.iterations.push_back(it);
    result.converged.push_back(converged);
    result.objective_traces.push_back(std::move(trace));
    result.residual_norms.push_back(views.frobenius());
  }

  result.sample_residuals.resize(samples.size());
  for (int i = 0; i < n; ++i) {
    result.sample_residuals[static_cast<size_t>(i)] =
        views.sqrts[static_cast<size_t>(i)].norm();
  }
  return result;
}

SubjectCovFit fit_subject_cov(const CovSample& sample, const FemSystem& fem,
                              double lambda, int rank, const FitConfig& config) {
  validate_samples({sample}, &fem);
  FunctionalDataset rows;
  rows.observations = sample.sqrt;
  rows.operators = {sample.op};

  FitConfig cfg = config;
  cfg.center = false;  // square-root rows are never centered

  SubjectCovFit fit;
  fit.basis = fit_pca(rows, fem, lambda, rank, cfg);

  const int got = static_cast<int>(fit.basis.components.size());
  const auto s = sample.S.rows();
  fit.scores.resize(s, got);
  fit.variances_sensor.resize(got);
  fit.variances_brain.resize(got);
  for (int r = 0; r < got; ++r) {
    const auto& component = fit.basis.components[static_cast<size_t>(r)];
    fit.scores.col(r) = component.scores;
    fit.variances_sensor[r] = sample.op.apply(component.coefficients).squaredNorm();
    const double nu = m_norm(fem, component.coefficients);
    fit.variances_brain[r] = nu * nu;
  }

  // post-estimation orthogonalization of the score matrix
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(fit.scores);
  Eigen::MatrixXd thin_q =
      qr.householderQ() * Eigen::MatrixXd::Identity(s, got);
  const Eigen::MatrixXd r_factor =
      qr.matrixQR().topRows(got).triangularView<Eigen::Upper>();
  for (int r = 0; r < got; ++r) {
    if (r_factor(r, r) < 0.0) thin_q.col(r) = -thin_q.col(r);
  }
  fit.scores_orthogonal = thin_q;
  return fit;
}

CovReconstruction::CovReconstruction(std::vector<double> weights,
                                     std::vector<Eigen::VectorXd> factors)
    : weights_(std::move(weights)), factors_(std::move(factors)) {
  if (weights_.size() != factors_.size()) {
    throw DimensionMismatch("reconstruction weights/factors size mismatch");
  }
}

double CovReconstruction::entry(int row, int col) const {
  double total = 0.0;
  for (size_t r = 0; r < weights_.size(); ++r) {
    const auto& f = factors_[r];
    if (row < 0 || col < 0 || row >= f.size() || col >= f.size()) {
      throw IndexOutOfRange("reconstruction entry (" + std::to_string(row) + ", " +
                            std::to_string(col) + ")");
    }
    total += weights_[r] * f[row] * f[col];
  }
  return total;
}

CovReconstruction reconstruct_cov(const CovPcResult& result, int sample_index,
                                  int truncation) {
  if (sample_index < 0 || sample_index >= result.sample_count()) {
    throw IndexOutOfRange("reconstruct_cov: sample index " +
                          std::to_string(sample_index));
  }
  if (truncation < 0 || truncation > result.rank()) {
    throw IndexOutOfRange("reconstruct_cov: truncation " + std::to_string(truncation) +
                          " of rank " + std::to_string(result.rank()));
  }
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> factors;
  weights.reserve(static_cast<size_t>(truncation));
  factors.reserve(static_cast<size_t>(truncation));
  for (int r = 0; r < truncation; ++r) {
    const double nu = result.component_m_norms[static_cast<size_t>(r)];
    weights.push_back(result.variances_brain(sample_index, r));
    factors.push_back(result.components[static_cast<size_t>(r)] / nu);
  }
  return CovReconstruction(std::move(weights), std::move(factors));
}

Eigen::VectorXd energy_map(const FemSystem& fem, const Eigen::VectorXd& c) {
  if (c.size() != fem.dim()) {
    throw DimensionMismatch("energy_map: coefficient length " +
                            std::to_string(c.size()) + ", expected " +
                            std::to_string(fem.dim()));
  }
  Eigen::VectorXd map = Eigen::VectorXd::Zero(fem.nodes);
  for (int q = 0; q < fem.channels; ++q) {
    map += c.segment(q * fem.nodes, fem.nodes).array().square().matrix();
  }
  return map;
}

}  // namespace ipca
