#include "ipca/regsel.hpp"

#include <numeric>

#include "ipca/parallel.hpp"
#include "ipca/rng.hpp"

namespace ipca {

namespace {

FunctionalDataset subset(const FunctionalDataset& data, const std::vector<int>& rows) {
  FunctionalDataset out;
  out.observations.resize(static_cast<Eigen::Index>(rows.size()), data.sensors());
  if (data.shared_operator()) {
    out.operators = data.operators;
  } else {
    out.operators.reserve(rows.size());
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    out.observations.row(static_cast<Eigen::Index>(i)) = data.observations.row(rows[i]);
    if (!data.shared_operator()) out.operators.push_back(data.operators[rows[i]]);
  }
  return out;
}

// Held-out score: squared residual of the joint least-squares fit of y on
// the component images K_l c_r.
double holdout_residual(const FunctionalDataset& data, int row, const PcBasis& basis) {
  const Eigen::VectorXd y = data.observations.row(row).transpose();
  const int rank = static_cast<int>(basis.components.size());
  if (rank == 0) return y.squaredNorm();
  Eigen::MatrixXd design(y.size(), rank);
  for (int r = 0; r < rank; ++r) {
    design.col(r) = data.op(row).apply(basis.components[static_cast<size_t>(r)].coefficients);
  }
  const Eigen::VectorXd coeffs = design.colPivHouseholderQr().solve(y);
  return (y - design * coeffs).squaredNorm();
}

}  // namespace

LambdaReport kfold_cv(const FunctionalDataset& data, const FemSystem& fem,
                      const std::vector<double>& grid, int folds, int rank,
                      const FitConfig& config, uint64_t seed) {
  data.validate(fem);
  if (grid.empty()) throw InvalidConfig("kfold_cv: empty lambda grid");
  const int m = data.samples();
  if (folds < 2) throw InsufficientSamples("kfold_cv: need K >= 2 folds");
  if (m < folds) {
    throw InsufficientSamples("kfold_cv: m = " + std::to_string(m) +
                              " samples for K = " + std::to_string(folds) + " folds");
  }

  std::vector<int> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);

  std::vector<std::vector<int>> fold_rows(static_cast<size_t>(folds));
  for (int i = 0; i < m; ++i) {
    fold_rows[static_cast<size_t>(i % folds)].push_back(order[static_cast<size_t>(i)]);
  }

  LambdaReport report;
  report.grid = grid;
  report.cv_error.assign(grid.size(), 0.0);

  std::vector<double> errors(grid.size(), 0.0);
  parallel_for(static_cast<int>(grid.size()), config.threads, [&](int g) {
    const double lambda = grid[static_cast<size_t>(g)];
    double total = 0.0;
    for (int k = 0; k < folds; ++k) {
      std::vector<int> train_rows;
      for (int j = 0; j < folds; ++j) {
        if (j == k) continue;
        train_rows.insert(train_rows.end(), fold_rows[static_cast<size_t>(j)].begin(),
                          fold_rows[static_cast<size_t>(j)].end());
      }
      FitConfig inner = config;
      inner.threads = 1;  // grid points already run in parallel
      const PcBasis basis = fit_pca(subset(data, train_rows), fem, lambda, rank, inner);
      for (int row : fold_rows[static_cast<size_t>(k)]) {
        total += holdout_residual(data, row, basis);
      }
    }
    errors[static_cast<size_t>(g)] = total;
  });

  report.cv_error = errors;
  size_t best = 0;
  for (size_t g = 1; g < grid.size(); ++g) {
    const bool better = errors[g] < errors[best];
    const bool tie_to_larger = errors[g] == errors[best] && grid[g] > grid[best];
    if (better || tie_to_larger) best = g;
  }
  report.has_chosen = true;
  report.chosen = grid[best];
  report.criterion = "cv-argmin";
  return report;
}

LambdaReport lcurve(const std::vector<CovSample>& samples, const FemSystem& fem,
                    const std::vector<double>& grid, int rank,
                    const FitConfig& config) {
  if (grid.empty()) throw InvalidConfig("lcurve: empty lambda grid");

  LambdaReport report;
  report.grid = grid;
  report.regularity.assign(grid.size(), 0.0);
  report.residual.assign(grid.size(), 0.0);

  std::vector<double> regularity(grid.size(), 0.0);
  std::vector<double> residual(grid.size(), 0.0);
  parallel_for(static_cast<int>(grid.size()), config.threads, [&](int g) {
    FitConfig inner = config;
    inner.threads = 1;
    const CovPcResult fit =
        fit_population_cov(samples, fem, grid[static_cast<size_t>(g)], rank, inner);
    double reg = 0.0;
    for (int r = 0; r < fit.rank(); ++r) {
      const Eigen::VectorXd unit =
          fit.components[static_cast<size_t>(r)] /
          fit.component_m_norms[static_cast<size_t>(r)];
      reg += gradient_energy(fem, unit);
    }
    double res = 0.0;
    for (double sample_res : fit.sample_residuals) res += sample_res;
    regularity[static_cast<size_t>(g)] = reg;
    residual[static_cast<size_t>(g)] = res;
  });

  report.regularity = regularity;
  report.residual = residual;
  return report;
}

}  // namespace ipca
