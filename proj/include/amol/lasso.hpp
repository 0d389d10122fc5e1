#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace amol {

/// Lasso on internally standardized columns; coefficients are reported on the
/// original column scale. Constant columns carry a zero coefficient.
struct LassoFit {
    double intercept = 0.0;
    std::vector<double> coefficients;
    double lambda = 0.0;
    std::vector<double> means;
    std::vector<double> scales;  // 0 marks a dropped constant column
    std::size_t sweeps = 0;
    std::vector<double> objective_trace;  // per sweep, when requested
};

struct LassoOptions {
    double tolerance = 1e-8;  // relative objective change between sweeps
    std::size_t max_sweeps = 100000;
    bool trace = false;
    // Per-column multipliers of lambda (0 = unpenalized); empty means all 1.
    std::vector<double> penalty_factors;
};

/// Minimizes (1/2n)|y - b0 - X b|^2 + lambda |b|_1 by cyclic coordinate descent.
LassoFit fit_lasso(const Eigen::MatrixXd& x, std::span<const double> y, double lambda,
                   const LassoOptions& options = {});

std::vector<double> predict(const LassoFit& fit, const Eigen::MatrixXd& x);
double predict_row(const LassoFit& fit, std::span<const double> row);

/// Smallest lambda at which every penalized coefficient is zero (on
/// standardized columns, after fitting any unpenalized ones).
double lambda_max(const Eigen::MatrixXd& x, std::span<const double> y,
                  std::span<const double> penalty_factors = {});

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(const Eigen::MatrixXd& x, std::span<const double> y,
                                std::size_t count = 50, double ratio = 1e-3,
                                std::span<const double> penalty_factors = {});

/// Grid lambda with the smallest mean held-out squared error; ties go to the
/// larger lambda. Row i belongs to fold i mod folds.
double select_lambda_cv(const Eigen::MatrixXd& x, std::span<const double> y, std::size_t folds,
                        std::span<const double> grid, const LassoOptions& options = {});

/// Default pipeline: 50-point grid, 5-fold selection, refit on all rows.
LassoFit fit_lasso_cv(const Eigen::MatrixXd& x, std::span<const double> y, std::size_t folds = 5,
                      std::size_t grid_size = 50, const LassoOptions& options = {});

}  // namespace amol
