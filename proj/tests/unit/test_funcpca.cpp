#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "ipca/funcpca.hpp"
#include "ipca/mesh.hpp"
#include "ipca/rng.hpp"
#include "ipca/synth.hpp"
#include "support/oracles.hpp"

using namespace ipca;
using ipca::testing::dense_solve;
using ipca::testing::random_matrix;
using ipca::testing::random_vector;

namespace {

ForwardOperator identity_op(int dim) {
  return {Eigen::MatrixXd::Identity(dim, dim), "I"};
}

// Rank-1 dataset y_l = z_l * K c with chosen scores.
FunctionalDataset rank1_dataset(const ForwardOperator& op, const Eigen::VectorXd& c,
                                const Eigen::VectorXd& scores) {
  FunctionalDataset data;
  data.operators = {op};
  const Eigen::VectorXd image = op.apply(c);
  data.observations = scores * image.transpose();
  return data;
}

void check_nonincreasing(const std::vector<double>& trace) {
  for (size_t t = 1; t < trace.size(); ++t) {
    CHECK(trace[t] <= trace[t - 1] + 1e-10 * std::max(1.0, trace[t - 1]));
  }
}

}  // namespace

TEST_CASE("update_scores") {
  const FemSystem fem = assemble(make_icosphere(0, 1.0));
  Rng rng(21);

  SUBCASE("single sample normalizes to +-1") {
    FunctionalDataset data;
    data.operators = {identity_op(fem.dim())};
    data.observations = random_vector(rng, fem.dim()).transpose();
    const Eigen::VectorXd c = random_vector(rng, fem.dim());
    const Eigen::VectorXd z = update_scores(data, fem, c);
    CHECK(z.size() == 1);
    CHECK(std::abs(std::abs(z[0]) - 1.0) <= 1e-15);
  }

  SUBCASE("identical samples get the uniform unit vector") {
    const ForwardOperator op = identity_op(fem.dim());
    const Eigen::VectorXd c = random_vector(rng, fem.dim());
    const int m = 5;
    FunctionalDataset data = rank1_dataset(op, c, Eigen::VectorXd::Ones(m));
    const Eigen::VectorXd z = update_scores(data, fem, c);
    CHECK((z - Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(5.0))).norm() <= 1e-12);
  }

  SUBCASE("matches the dense formula with per-sample operators") {
    const int m = 4;
    const int s = 6;
    FunctionalDataset data;
    data.observations = random_matrix(rng, m, s);
    for (int l = 0; l < m; ++l) {
      data.operators.push_back({random_matrix(rng, s, fem.dim()),
                                "K" + std::to_string(l)});
    }
    const Eigen::VectorXd c = random_vector(rng, fem.dim());
    Eigen::VectorXd expected(m);
    for (int l = 0; l < m; ++l) {
      expected[l] = data.observations.row(l).dot(data.operators[l].matrix * c);
    }
    expected /= expected.norm();
    CHECK((update_scores(data, fem, c) - expected).norm() <= 1e-12);
    CHECK(std::abs(update_scores(data, fem, c).norm() - 1.0) <= 1e-10);
  }

  SUBCASE("vanishing projections raise DegenerateComponent") {
    FunctionalDataset data;
    data.operators = {identity_op(fem.dim())};
    data.observations = Eigen::MatrixXd::Zero(3, fem.dim());
    data.observations(0, 0) = 1.0;  // nonzero data, orthogonal to the image
    Eigen::VectorXd c = Eigen::VectorXd::Zero(fem.dim());
    c[1] = 1.0;
    data.observations.col(1).setZero();
    CHECK_THROWS_AS(update_scores(data, fem, c), DegenerateComponent);
  }
}

TEST_CASE("update_component") {
  const FemSystem fem = assemble(make_icosphere(0, 1.0));
  Rng rng(22);

  SUBCASE("identity operator, lambda 0, one sample") {
    FunctionalDataset data;
    data.operators = {identity_op(fem.dim())};
    const Eigen::VectorXd y = random_vector(rng, fem.dim());
    data.observations = y.transpose();
    const Eigen::VectorXd c =
        update_component(data, fem, Eigen::VectorXd::Ones(1), 0.0);
    CHECK((c - y).norm() <= 1e-9 * y.norm());
  }

  SUBCASE("one-hot scores reduce to the single-sample solve") {
    const int m = 4;
    const int s = 7;
    FunctionalDataset data;
    data.observations = random_matrix(rng, m, s);
    for (int l = 0; l < m; ++l) {
      data.operators.push_back({random_matrix(rng, s, fem.dim()),
                                "K" + std::to_string(l)});
    }
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    z[2] = 1.0;
    const Eigen::VectorXd c = update_component(data, fem, z, 0.2);

    FunctionalDataset single;
    single.operators = {data.operators[2]};
    single.observations = data.observations.row(2);
    const Eigen::VectorXd c_single =
        update_component(single, fem, Eigen::VectorXd::Ones(1), 0.2);
    CHECK((c - c_single).norm() <= 1e-9 * c_single.norm());
  }

  SUBCASE("random instance matches the dense normal equations") {
    const int m = 8;
    const int s = 5;
    FunctionalDataset data;
    data.observations = random_matrix(rng, m, s);
    for (int l = 0; l < m; ++l) {
      data.operators.push_back({random_matrix(rng, s, fem.dim()),
                                "K" + std::to_string(l)});
    }
    Eigen::VectorXd z = random_vector(rng, m);
    z /= z.norm();
    const double lambda = 0.1;
    const Eigen::VectorXd c = update_component(data, fem, z, lambda);

    std::vector<std::pair<double, const ForwardOperator*>> terms;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(fem.dim());
    for (int l = 0; l < m; ++l) {
      terms.emplace_back(z[l] * z[l], &data.operators[l]);
      rhs += z[l] * data.operators[l].matrix.transpose() *
             data.observations.row(l).transpose();
    }
    const Eigen::VectorXd expected = dense_solve(terms, fem, lambda, rhs);
    CHECK((c - expected).norm() <= 1e-8 * expected.norm());
  }

  SUBCASE("the stacked least-squares flag gives the same component") {
    const int m = 6;
    const int s = 9;
    FunctionalDataset data;
    data.operators = {{random_matrix(rng, s, fem.dim()), "K"}};
    data.observations = random_matrix(rng, m, s);
    Eigen::VectorXd z = random_vector(rng, m);
    z /= z.norm();
    FitConfig lsq;
    lsq.use_sparse_lsq = true;
    lsq.solver_tol = 1e-12;
    FitConfig cg;
    cg.solver_tol = 1e-12;
    const Eigen::VectorXd via_lsq = update_component(data, fem, z, 0.3, lsq);
    const Eigen::VectorXd via_cg = update_component(data, fem, z, 0.3, cg);
    CHECK((via_lsq - via_cg).norm() <= 1e-8 * via_cg.norm());
  }
}

TEST_CASE("fit_pc recovers an exact rank-1 model") {
  const FemSystem fem = assemble(make_icosphere(1, 1.0));
  Rng rng(23);
  ForwardOperator op{random_matrix(rng, fem.dim() + 5, fem.dim()), "K"};  // full column rank
  const Eigen::VectorXd truth = random_vector(rng, fem.dim());
  Eigen::VectorXd scores = random_vector(rng, 12);

  const FunctionalDataset data = rank1_dataset(op, truth, scores);
  FitConfig config;
  config.max_outer = 30;
  config.tol = 1e-12;
  const PcComponent pc = fit_pc(data, fem, 0.0, config);

  CHECK(pc.converged);
  CHECK(std::abs(pc.scores.norm() - 1.0) <= 1e-10);
  CHECK(std::abs(m_correlation(fem, pc.coefficients, truth)) > 1.0 - 1e-8);
  CHECK(pc.scores.sum() > 0.0);  // sign canonicalization
  check_nonincreasing(pc.objective_trace);
}

TEST_CASE("fit_pc fixed point matches the dense eigen oracle at lambda 0") {
  // With a shared full-column-rank operator and no penalty, the fitted
  // image direction maximizes w^T Y^T Y w over w in range(K): compare
  // against the dense eigendecomposition of the projected data Gram.
  const FemSystem fem = assemble(make_icosphere(0, 1.0));
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Rng rng(seed);
    const int s = fem.dim() + 6;
    const int m = 15;
    ForwardOperator op{random_matrix(rng, s, fem.dim()), "K"};

    // planted dominant direction keeps the alternation fast and the gap wide
    const Eigen::VectorXd direction = random_vector(rng, fem.dim());
    FunctionalDataset data;
    data.operators = {op};
    data.observations = random_vector(rng, m) * op.apply(direction).transpose() +
                        0.05 * random_matrix(rng, m, s);

    FitConfig config;
    config.max_outer = 200;
    config.tol = 1e-13;
    config.center = false;
    const PcComponent pc = fit_pc(data, fem, 0.0, config);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(op.matrix);
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(s, fem.dim());
    const Eigen::MatrixXd projected =
        q.transpose() * data.observations.transpose() * data.observations * q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(projected);
    const Eigen::VectorXd oracle = q * eig.eigenvectors().col(fem.dim() - 1);

    CHECK(ipca::testing::span_angle(op.apply(pc.coefficients), oracle) < 1e-6);
  }
}

TEST_CASE("fit_pc with one sample returns the regularized inverse") {
  const FemSystem fem = assemble(make_icosphere(0, 1.0));
  Rng rng(24);
  ForwardOperator op{random_matrix(rng, 8, fem.dim()), "K"};
  FunctionalDataset data;
  data.operators = {op};
  data.observations = random_vector(rng, 8).transpose();

  const double lambda = 0.4;
  const PcComponent pc = fit_pc(data, fem, lambda, {});
  CHECK(std::abs(std::abs(pc.scores[0]) - 1.0) <= 1e-12);

  const Eigen::VectorXd expected = dense_solve(
      {{1.0, &op}}, fem, lambda,
      op.matrix.transpose() * data.observations.row(0).transpose());
  const double sign = pc.scores[0] > 0 ? 1.0 : -1.0;
  CHECK((sign * pc.coefficients - expected).norm() <= 1e-8 * expected.norm());
}

TEST_CASE("scale equivariance: scaling the data scales the component only") {
  const FemSystem fem = assemble(make_icosphere(0, 1.0));
  Rng rng(25);
  ForwardOperator op{random_matrix(rng, 9, fem.dim()), "K"};
  FunctionalDataset data;
  data.operators = {op};
  data.observations = random_matrix(rng, 7, 9);

  FitConfig config;
  config.center = false;
  const double lambda = 0.2;
  const PcComponent base = fit_pc(data, fem, lambda, config);

  const double alpha = 3.5;
  FunctionalDataset scaled = data;
  scaled.observations *= alpha;
  const PcComponent rescaled = fit_pc(scaled, fem, lambda, config);

  CHECK((rescaled.scores - base.scores).norm() <= 1e-10);
  CHECK((rescaled.coefficients - alpha * base.coefficients).norm() <=
        1e-9 * alpha * base.coefficients.norm());
  CHECK(rescaled.iterations == base.iterations);
}

TEST_CASE("deflation") {
  const FemSystem fem = assemble(make_icosphere(0, 1.0));
  Rng rng(26);
  ForwardOperator op{random_matrix(rng, fem.dim() + 4, fem.dim()), "K"};

  SUBCASE("exact rank-1 data deflates to zero") {
    const FunctionalDataset data =
        rank1_dataset(op, random_vector(rng, fem.dim()), random_vector(rng, 9));
    FitConfig config;
    config.max_outer = 40;
    config.tol = 1e-13;
    const PcComponent pc = fit_pc(data, fem, 0.0, config);
    const FunctionalDataset residual = deflate(data, pc);
    CHECK(residual.observations.norm() <= 1e-8 * data.observations.norm());
  }

  SUBCASE("rank-2 data deflates to numerical rank 1") {
    const Eigen::VectorXd c1 = random_vector(rng, fem.dim());
    const Eigen::VectorXd c2 = random_vector(rng, fem.dim());
    FunctionalDataset data;
    data.operators = {op};
    data.observations = 6.0 * random_vector(rng, 10) * op.apply(c1).transpose() +
                        2.0 * random_vector(rng, 10) * op.apply(c2).transpose();
    FitConfig config;
    config.max_outer = 100;
    config.tol = 1e-13;
    config.center = false;
    const PcComponent pc = fit_pc(data, fem, 0.0, config);
    const FunctionalDataset residual = deflate(data, pc);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual.observations);
    CHECK(svd.singularValues()[1] <=
          1e-6 * svd.singularValues()[0]);  // second direction is gone
  }
}

TEST_CASE("fit_pca driver") {
  const FemSystem fem = assemble(make_icosphere(0, 1.0));
  Rng rng(27);
  ForwardOperator op{random_matrix(rng, fem.dim() + 4, fem.dim()), "K"};

  SUBCASE("rank 1 request reduces to fit_pc") {
    FunctionalDataset data;
    data.operators = {op};
    data.observations = random_matrix(rng, 6, fem.dim() + 4);
    FitConfig config;
    config.center = false;
    const PcBasis basis = fit_pca(data, fem, 0.1, 1, config);
    const PcComponent direct = fit_pc(data, fem, 0.1, config);
    REQUIRE(basis.components.size() == 1);
    CHECK((basis.components[0].coefficients - direct.coefficients).norm() <=
          1e-12 * direct.coefficients.norm());
    CHECK((basis.components[0].scores - direct.scores).norm() <= 1e-12);
  }

  SUBCASE("noiseless rank-2 data yields exactly two components for rank 3") {
    FunctionalDataset data;
    data.operators = {op};
    data.observations =
        5.0 * random_vector(rng, 8) * op.apply(random_vector(rng, fem.dim())).transpose() +
        1.5 * random_vector(rng, 8) * op.apply(random_vector(rng, fem.dim())).transpose();
    FitConfig config;
    config.center = false;
    config.max_outer = 200;
    config.tol = 1e-14;
    const PcBasis basis = fit_pca(data, fem, 0.0, 3, config);
    CHECK(basis.components.size() == 2);
    REQUIRE(basis.residual_norms.size() == 2);
    CHECK(basis.residual_norms[1] <= 1e-12 * data.observations.norm());
  }

  SUBCASE("residual norms never increase across stages") {
    FunctionalDataset data;
    data.operators = {op};
    data.observations = random_matrix(rng, 10, fem.dim() + 4);
    const PcBasis basis = fit_pca(data, fem, 0.05, 4, {});
    for (size_t r = 1; r < basis.residual_norms.size(); ++r) {
      CHECK(basis.residual_norms[r] <= basis.residual_norms[r - 1] * (1 + 1e-12));
    }
    for (const auto& component : basis.components) {
      check_nonincreasing(component.objective_trace);
    }
  }

  SUBCASE("centering subtracts the per-sensor mean") {
    FunctionalDataset data;
    data.operators = {op};
    data.observations = random_matrix(rng, 6, fem.dim() + 4);
    FunctionalDataset centered = data;
    centered.observations.rowwise() -= data.observations.colwise().mean();

    FitConfig with_centering;  // default center = true
    FitConfig without;
    without.center = false;
    const PcBasis a = fit_pca(data, fem, 0.1, 1, with_centering);
    const PcBasis b = fit_pca(centered, fem, 0.1, 1, without);
    CHECK((a.components[0].coefficients - b.components[0].coefficients).norm() <=
          1e-12 * b.components[0].coefficients.norm());
  }
}

TEST_CASE("fit_from_sensor_cov") {
  const FemSystem fem = assemble(make_icosphere(0, 1.0));
  Rng rng(28);

  SUBCASE("isotropic covariance with identity operator is a documented fixed point") {
    const ForwardOperator op = identity_op(fem.dim());
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(fem.dim(), fem.dim());
    const PcBasis basis = fit_from_sensor_cov(s, op, fem, 0.0, 1, {});
    REQUIRE(basis.components.size() == 1);
    CHECK(basis.components[0].converged);
    CHECK(std::abs(m_norm(fem, basis.components[0].coefficients) - 1.0) <= 1e-10);
  }

  SUBCASE("rank-1 covariance recovers its direction") {
    const ForwardOperator op = identity_op(fem.dim());
    const Eigen::VectorXd v = random_vector(rng, fem.dim());
    const Eigen::MatrixXd s = v * v.transpose();
    const PcBasis basis = fit_from_sensor_cov(s, op, fem, 0.0, 1, {});
    REQUIRE(basis.components.size() == 1);
    CHECK(ipca::testing::span_angle(basis.components[0].coefficients, v) < 1e-8);
  }

  SUBCASE("matches fit_pc when fed sum_l y_l y_l^T") {
    ForwardOperator op{random_matrix(rng, 10, fem.dim()), "K"};
    const Eigen::VectorXd direction = random_vector(rng, fem.dim());
    FunctionalDataset data;
    data.operators = {op};
    data.observations = random_vector(rng, 12) * op.apply(direction).transpose() +
                        0.1 * random_matrix(rng, 12, 10);

    FitConfig config;
    config.max_outer = 300;
    config.tol = 1e-13;
    config.center = false;
    const double lambda = 0.05;
    const PcComponent direct = fit_pc(data, fem, lambda, config);

    const Eigen::MatrixXd s =
        data.observations.transpose() * data.observations;
    const PcBasis from_cov = fit_from_sensor_cov(s, op, fem, lambda, 1, config);
    REQUIRE(from_cov.components.size() == 1);
    CHECK(m_angle(fem, from_cov.components[0].coefficients, direct.coefficients) <
          1e-6);
  }

  SUBCASE("asymmetric or indefinite inputs are rejected") {
    const ForwardOperator op = identity_op(fem.dim());
    Eigen::MatrixXd bad = random_matrix(rng, fem.dim(), fem.dim());
    CHECK_THROWS_AS(fit_from_sensor_cov(bad, op, fem, 0.0, 1, {}), NotSymmetric);
    Eigen::MatrixXd indefinite = -Eigen::MatrixXd::Identity(fem.dim(), fem.dim());
    CHECK_THROWS_AS(fit_from_sensor_cov(indefinite, op, fem, 0.0, 1, {}), NotPSD);
  }
}
