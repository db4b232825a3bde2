#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipca/covpca.hpp"
#include "ipca/funcpca.hpp"

namespace ipca {

/// Regularization-selection report. Lists are either empty or aligned
/// with `grid`.
struct LambdaReport {
  std::vector<double> grid;
  std::vector<double> cv_error;
  std::vector<double> regularity;  // sum_r grad-energy of unit-M components
  std::vector<double> residual;    // sum_i ||deflated S_i^{1/2}||_F
  bool has_chosen = false;
  double chosen = 0.0;
  std::string criterion;
};

/// K-fold cross-validation over the lambda grid: seeded shuffle into K
/// folds; per lambda, fit on the training folds and score each held-out
/// sample by joint least-squares regression on the fitted component
/// images (components are never refit on held-out data). cv_error is the
/// fold-summed squared residual; chosen is the argmin, ties to the larger
/// lambda. Deterministic given (seed, grid, data).
LambdaReport kfold_cv(const FunctionalDataset& data, const FemSystem& fem,
                      const std::vector<double>& grid, int folds, int rank,
                      const FitConfig& config, uint64_t seed);

/// L-curve data for the population covariance model: per lambda, a full
/// fit and the (regularity, residual) pair. No corner is selected; the
/// curve is reported for inspection.
LambdaReport lcurve(const std::vector<CovSample>& samples, const FemSystem& fem,
                    const std::vector<double>& grid, int rank,
                    const FitConfig& config);

}  // namespace ipca
