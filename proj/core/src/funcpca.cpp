#include "ipca/funcpca.hpp"

#include <cmath>

#include "ipca/log.hpp"
#include "ipca/parallel.hpp"

namespace ipca {

namespace {

constexpr double kRankExhausted = 1e-12;

// Sign representative: positive sum, tie broken by first nonzero entry.
double canonical_sign(const Eigen::VectorXd& v) {
  const double total = v.sum();
  if (total > 0.0) return 1.0;
  if (total < 0.0) return -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) return v[i] > 0.0 ? 1.0 : -1.0;
  }
  return 1.0;
}

Eigen::VectorXd initial_scores(const FunctionalDataset& data, ScoreInit init) {
  const int m = data.samples();
  if (init == ScoreInit::Uniform || m == 1) {
    return Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(double(m)));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.observations, Eigen::ComputeThinU);
  Eigen::VectorXd z = svd.matrixU().col(0);
  z *= canonical_sign(z);
  return z;
}

}  // namespace

void FunctionalDataset::validate(const FemSystem& fem) const {
  const int m = samples();
  if (m < 1) throw DimensionMismatch("dataset has no samples");
  if (operators.size() != 1 && static_cast<int>(operators.size()) != m) {
    throw DimensionMismatch("operator count " + std::to_string(operators.size()) +
                            " must be 1 or m = " + std::to_string(m));
  }
  for (const auto& op : operators) {
    if (op.sensors() != sensors()) {
      throw DimensionMismatch("operator '" + op.id + "' has " +
                              std::to_string(op.sensors()) + " sensors, data has " +
                              std::to_string(sensors()));
    }
    if (op.domain_dim() != fem.dim()) {
      throw DimensionMismatch("operator '" + op.id + "' domain " +
                              std::to_string(op.domain_dim()) + " vs FEM dim " +
                              std::to_string(fem.dim()));
    }
    if (!op.matrix.allFinite()) {
      throw DimensionMismatch("operator '" + op.id + "' has non-finite entries");
    }
  }
}

Eigen::VectorXd update_scores(const FunctionalDataset& data, const FemSystem& fem,
                              const Eigen::VectorXd& c) {
  data.validate(fem);
  if (c.size() != fem.dim()) {
    throw DimensionMismatch("update_scores: component length " +
                            std::to_string(c.size()));
  }
  const int m = data.samples();
  Eigen::VectorXd projections(m);
  double image_sq = 0.0;
  if (data.shared_operator()) {
    const Eigen::VectorXd image = data.op(0).apply(c);
    projections = data.observations * image;
    image_sq = double(m) * image.squaredNorm();
  } else {
    for (int l = 0; l < m; ++l) {
      const Eigen::VectorXd image = data.op(l).apply(c);
      projections[l] = data.observations.row(l).dot(image);
      image_sq += image.squaredNorm();
    }
  }
  const double norm = projections.norm();
  const double scale = data.observations.norm() * std::sqrt(image_sq / double(m));
  if (norm == 0.0 || norm < 1e-14 * scale) {
    throw DegenerateComponent("update_scores: all projections vanish");
  }
  return projections / norm;
}

Eigen::VectorXd update_component(const FunctionalDataset& data, const FemSystem& fem,
                                 const Eigen::VectorXd& z, double lambda,
                                 const FitConfig& config,
                                 const Eigen::VectorXd* warm) {
  data.validate(fem);
  const int m = data.samples();
  if (z.size() != m) {
    throw DimensionMismatch("update_component: score length " + std::to_string(z.size()) +
                            " vs m = " + std::to_string(m));
  }

  if (config.use_sparse_lsq && data.shared_operator()) {
    const Eigen::VectorXd stacked_rhs = data.observations.transpose() * z;
    auto [c, report] = solve_sparse_lsq(data.op(0), lambda, fem, stacked_rhs,
                                        config.solver_tol, config.solver_max_iter);
    (void)report;
    return c;
  }

  GramOperator gram;
  gram.fem = &fem;
  gram.lambda = lambda;
  gram.threads = config.threads;
  Eigen::VectorXd rhs;
  if (data.shared_operator()) {
    gram.terms.push_back({z.squaredNorm(), &data.op(0)});
    rhs = data.op(0).apply_adjoint(data.observations.transpose() * z);
  } else {
    gram.terms.reserve(static_cast<size_t>(m));
    std::vector<Eigen::VectorXd> slots(static_cast<size_t>(m));
    for (int l = 0; l < m; ++l) gram.terms.push_back({z[l] * z[l], &data.op(l)});
    parallel_for(m, config.threads, [&](int l) {
      slots[static_cast<size_t>(l)] =
          z[l] * data.op(l).apply_adjoint(data.observations.row(l).transpose());
    });
    rhs = Eigen::VectorXd::Zero(fem.dim());
    for (const auto& slot : slots) rhs += slot;
  }

  auto [c, report] = solve_regularized(gram, rhs, config.solver_tol,
                                       config.solver_max_iter, warm);
  (void)report;
  return c;
}

double component_objective(const FunctionalDataset& data, const FemSystem& fem,
                           const Eigen::VectorXd& z, const Eigen::VectorXd& c,
                           double lambda) {
  double fit = 0.0;
  if (data.shared_operator()) {
    const Eigen::VectorXd image = data.op(0).apply(c);
    fit = (data.observations - z * image.transpose()).squaredNorm();
  } else {
    for (int l = 0; l < data.samples(); ++l) {
      fit += (data.observations.row(l).transpose() - z[l] * data.op(l).apply(c))
                 .squaredNorm();
    }
  }
  return fit + lambda * z.squaredNorm() * penalty_quadform(fem, c);
}

PcComponent fit_pc(const FunctionalDataset& data, const FemSystem& fem,
                   double lambda, const FitConfig& config) {
  data.validate(fem);
  if (lambda < 0.0) throw DimensionMismatch("fit_pc: lambda must be >= 0");

  PcComponent out;
  out.lambda = lambda;
  out.sign_convention = "score-sum-positive";

  Eigen::VectorXd z = initial_scores(data, config.init);
  Eigen::VectorXd c;
  bool converged = false;
  int it = 0;
  while (it < config.max_outer) {
    const Eigen::VectorXd c_prev = c;
    c = update_component(data, fem, z, lambda, config,
                         c.size() > 0 ? &c : nullptr);
    z = update_scores(data, fem, c);
    ++it;
    out.objective_trace.push_back(component_objective(data, fem, z, c, lambda));
    if (c_prev.size() > 0) {
      const double denom = m_norm(fem, c_prev);
      const double change = m_norm(fem, (c - c_prev).eval());
      if (denom > 0.0 && change / denom < config.tol) {
        converged = true;
        break;
      }
    }
  }

  const double sign = canonical_sign(z);
  out.coefficients = sign * c;
  out.scores = sign * z;
  out.iterations = it;
  out.converged = converged;
  return out;
}

FunctionalDataset deflate(const FunctionalDataset& data, const PcComponent& component) {
  const int m = data.samples();
  if (component.scores.size() != m) {
    throw DimensionMismatch("deflate: component has " +
                            std::to_string(component.scores.size()) +
                            " scores, dataset has m = " + std::to_string(m));
  }
  FunctionalDataset residual = data;
  if (data.shared_operator()) {
    const Eigen::VectorXd image = data.op(0).apply(component.coefficients);
    residual.observations -= component.scores * image.transpose();
  } else {
    for (int l = 0; l < m; ++l) {
      residual.observations.row(l) -=
          component.scores[l] * data.op(l).apply(component.coefficients).transpose();
    }
  }
  return residual;
}

PcBasis fit_pca(const FunctionalDataset& data, const FemSystem& fem, double lambda,
                int rank, const FitConfig& config) {
  if (rank < 1) throw DimensionMismatch("fit_pca: rank must be >= 1");
  data.validate(fem);

  FunctionalDataset work = data;
  if (config.center && work.samples() >= 2) {
    const Eigen::RowVectorXd mean = work.observations.colwise().mean();
    work.observations.rowwise() -= mean;
  }

  PcBasis basis;
  const double original_norm = work.observations.norm();
  for (int r = 0; r < rank; ++r) {
    if (work.observations.norm() < kRankExhausted * original_norm) {
      log_info("fit_pca: rank exhausted after " + std::to_string(r) + " components");
      break;
    }
    PcComponent component;
    try {
      component = fit_pc(work, fem, lambda, config);
    } catch (const DegenerateComponent&) {
      if (r == 0) throw;
      log_info("fit_pca: degenerate stage " + std::to_string(r) + ", stopping");
      break;
    }
    work = deflate(work, component);
    basis.residual_norms.push_back(work.observations.norm());
    basis.components.push_back(std::move(component));
  }
  return basis;
}

PcBasis fit_from_sensor_cov(const Eigen::MatrixXd& sensor_cov,
                            const ForwardOperator& op, const FemSystem& fem,
                            double lambda, int rank, const FitConfig& config) {
  if (rank < 1) throw DimensionMismatch("fit_from_sensor_cov: rank must be >= 1");
  if (sensor_cov.rows() != sensor_cov.cols() || sensor_cov.rows() != op.sensors()) {
    throw DimensionMismatch("fit_from_sensor_cov: covariance is " +
                            std::to_string(sensor_cov.rows()) + "x" +
                            std::to_string(sensor_cov.cols()) + ", operator has " +
                            std::to_string(op.sensors()) + " sensors");
  }
  const double asym = (sensor_cov - sensor_cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, sensor_cov.cwiseAbs().maxCoeff())) {
    throw NotSymmetric("fit_from_sensor_cov: covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      ((sensor_cov + sensor_cov.transpose()) / 2.0).eval());
  if (eig.eigenvalues().minCoeff() <
      -1e-8 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff())) {
    throw NotPSD("fit_from_sensor_cov: covariance has negative eigenvalues");
  }

  Eigen::MatrixXd S = (sensor_cov + sensor_cov.transpose()) / 2.0;
  PcBasis basis;
  const double original_norm = S.norm();

  for (int r = 0; r < rank; ++r) {
    if (S.norm() < kRankExhausted * original_norm) break;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> stage(S);
    Eigen::VectorXd lead = stage.eigenvectors().col(S.rows() - 1);
    lead *= canonical_sign(lead);

    Eigen::VectorXd c = op.apply_adjoint(lead);
    if (c.norm() == 0.0) c = Eigen::VectorXd::Ones(fem.dim());
    c /= m_norm(fem, c);

    GramOperator gram;
    gram.fem = &fem;
    gram.lambda = lambda;
    gram.threads = config.threads;
    gram.terms.push_back({1.0, &op});

    PcComponent component;
    component.lambda = lambda;
    component.sign_convention = "coefficient-sum-positive";
    bool converged = false;
    int it = 0;
    while (it < config.max_outer) {
      const Eigen::VectorXd rhs = op.apply_adjoint(S * op.apply(c));
      auto [next, report] = solve_regularized(gram, rhs, config.solver_tol,
                                              config.solver_max_iter, &c);
      (void)report;
      const double norm = m_norm(fem, next);
      if (norm == 0.0) {
        throw SingularSystem("fit_from_sensor_cov: iteration collapsed to zero");
      }
      next /= norm;
      ++it;
      // sign-aligned relative change; the power map determines c up to sign
      const double flip = l2_inner(fem, next, c) >= 0.0 ? 1.0 : -1.0;
      const double change = m_norm(fem, (next - flip * c).eval());
      c = next;
      if (change < config.tol) {
        converged = true;
        break;
      }
    }

    component.coefficients = canonical_sign(c) * c;
    component.scores = Eigen::VectorXd();
    component.iterations = it;
    component.converged = converged;

    Eigen::VectorXd image = op.apply(component.coefficients);
    const double image_norm = image.norm();
    if (image_norm > 0.0) {
      image /= image_norm;
      const Eigen::MatrixXd proj =
          Eigen::MatrixXd::Identity(S.rows(), S.cols()) - image * image.transpose();
      S = (proj * S * proj).eval();
    }
    basis.residual_norms.push_back(S.norm());
    basis.components.push_back(std::move(component));
  }
  return basis;
}

}  // namespace ipca
