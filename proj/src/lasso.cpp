#include "amol/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amol/error.hpp"

namespace amol {

namespace {

struct Standardized {
    Eigen::MatrixXd z;
    Eigen::VectorXd y;  // centered
    double y_mean = 0.0;
    std::vector<double> means;
    std::vector<double> scales;
};

void check_inputs(const Eigen::MatrixXd& x, std::span<const double> y) {
    require(x.rows() >= 2, ErrorCode::invalid_argument, "lasso needs at least two rows");
    require(static_cast<std::size_t>(x.rows()) == y.size(), ErrorCode::dimension_mismatch,
            "lasso response length differs from row count");
    require(x.allFinite(), ErrorCode::numerical, "non-finite lasso design entry");
    for (double v : y) require(std::isfinite(v), ErrorCode::numerical, "non-finite lasso response");
}

Standardized standardize(const Eigen::MatrixXd& x, std::span<const double> y) {
    const auto n = x.rows();
    Standardized s;
    s.z = x;
    s.means.resize(static_cast<std::size_t>(x.cols()));
    s.scales.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double m = x.col(j).mean();
        s.z.col(j).array() -= m;
        const double sd = std::sqrt(s.z.col(j).squaredNorm() / static_cast<double>(n));
        const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(m)));
        s.means[static_cast<std::size_t>(j)] = m;
        s.scales[static_cast<std::size_t>(j)] = constant ? 0.0 : sd;
        if (constant)
            s.z.col(j).setZero();
        else
            s.z.col(j) /= sd;
    }
    s.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    s.y_mean = s.y.mean();
    s.y.array() -= s.y_mean;
    return s;
}

std::vector<double> penalties(const LassoOptions& opt, Eigen::Index p) {
    if (opt.penalty_factors.empty()) return std::vector<double>(static_cast<std::size_t>(p), 1.0);
    require(opt.penalty_factors.size() == static_cast<std::size_t>(p), ErrorCode::dimension_mismatch,
            "penalty factor count differs from column count");
    for (double f : opt.penalty_factors)
        require(f >= 0.0 && std::isfinite(f), ErrorCode::invalid_argument,
                "penalty factors must be nonnegative");
    return opt.penalty_factors;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Coordinate descent on standardized data, warm-started from beta.
std::size_t descend(const Standardized& s, double lambda, Eigen::VectorXd& beta,
                    const LassoOptions& opt, std::vector<double>* trace) {
    const auto n = static_cast<double>(s.z.rows());
    const auto p = s.z.cols();
    const std::vector<double> pf = penalties(opt, p);
    Eigen::VectorXd r = s.y - s.z * beta;
    auto objective = [&] {
        double pen = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) pen += pf[static_cast<std::size_t>(j)] * std::abs(beta[j]);
        return 0.5 * r.squaredNorm() / n + lambda * pen;
    };

    auto sweep = [&](bool active_only) {
        bool changed_support = false;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (s.scales[static_cast<std::size_t>(j)] == 0.0) continue;
            if (active_only && beta[j] == 0.0) continue;
            const double old = beta[j];
            const double rho = s.z.col(j).dot(r) / n + old;
            const double b = soft_threshold(rho, lambda * pf[static_cast<std::size_t>(j)]);
            if (b != old) {
                r.noalias() -= s.z.col(j) * (b - old);
                beta[j] = b;
                if ((old == 0.0) != (b == 0.0)) changed_support = true;
            }
        }
        return changed_support;
    };

    double prev = objective();
    if (trace) trace->push_back(prev);
    std::size_t sweeps = 0;
    bool full = true;
    while (sweeps < opt.max_sweeps) {
        const bool support_changed = sweep(!full);
        ++sweeps;
        const double obj = objective();
        if (trace) trace->push_back(obj);
        const double rel = std::abs(prev - obj) / std::max(std::abs(obj), 1e-300);
        prev = obj;
        if (rel < opt.tolerance || obj == 0.0) {
            if (full && !support_changed) break;
            full = true;  // confirm on all columns
        } else {
            full = false;
        }
    }
    return sweeps;
}

LassoFit unstandardize(const Standardized& s, const Eigen::VectorXd& beta, double lambda) {
    LassoFit fit;
    fit.lambda = lambda;
    fit.means = s.means;
    fit.scales = s.scales;
    fit.coefficients.assign(s.means.size(), 0.0);
    fit.intercept = s.y_mean;
    for (std::size_t j = 0; j < s.means.size(); ++j) {
        if (s.scales[j] == 0.0) continue;
        fit.coefficients[j] = beta[static_cast<Eigen::Index>(j)] / s.scales[j];
        fit.intercept -= fit.coefficients[j] * s.means[j];
    }
    return fit;
}

double lambda_max_std(const Standardized& s, const std::vector<double>& pf) {
    const double n = static_cast<double>(s.z.rows());
    Eigen::VectorXd r = s.y;
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < s.z.cols(); ++j)
        if (pf[static_cast<std::size_t>(j)] == 0.0 && s.scales[static_cast<std::size_t>(j)] != 0.0)
            free.push_back(j);
    if (!free.empty()) {
        const Eigen::MatrixXd zf = s.z(Eigen::all, free);
        r -= zf * zf.completeOrthogonalDecomposition().solve(s.y);
    }
    double m = 0.0;
    for (Eigen::Index j = 0; j < s.z.cols(); ++j) {
        const double f = pf[static_cast<std::size_t>(j)];
        if (f > 0.0) m = std::max(m, std::abs(s.z.col(j).dot(r)) / n / f);
    }
    return m;
}

}  // namespace

LassoFit fit_lasso(const Eigen::MatrixXd& x, std::span<const double> y, double lambda,
                   const LassoOptions& options) {
    check_inputs(x, y);
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::invalid_argument,
            "lambda must be nonnegative");
    const Standardized s = standardize(x, y);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
    std::vector<double> trace;
    const std::size_t sweeps = descend(s, lambda, beta, options, options.trace ? &trace : nullptr);
    LassoFit fit = unstandardize(s, beta, lambda);
    fit.sweeps = sweeps;
    fit.objective_trace = std::move(trace);
    return fit;
}

double predict_row(const LassoFit& fit, std::span<const double> row) {
    require(row.size() == fit.coefficients.size(), ErrorCode::dimension_mismatch,
            "prediction row length differs from fitted column count");
    double v = fit.intercept;
    for (std::size_t j = 0; j < row.size(); ++j) v += fit.coefficients[j] * row[j];
    return v;
}

std::vector<double> predict(const LassoFit& fit, const Eigen::MatrixXd& x) {
    require(static_cast<std::size_t>(x.cols()) == fit.coefficients.size(),
            ErrorCode::dimension_mismatch, "prediction matrix column count differs from fit");
    const Eigen::VectorXd coef =
        Eigen::Map<const Eigen::VectorXd>(fit.coefficients.data(), x.cols());
    const Eigen::VectorXd out = (x * coef).array() + fit.intercept;
    return {out.data(), out.data() + out.size()};
}

double lambda_max(const Eigen::MatrixXd& x, std::span<const double> y,
                  std::span<const double> penalty_factors) {
    check_inputs(x, y);
    LassoOptions opt;
    opt.penalty_factors.assign(penalty_factors.begin(), penalty_factors.end());
    return lambda_max_std(standardize(x, y), penalties(opt, x.cols()));
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& x, std::span<const double> y,
                                std::size_t count, double ratio,
                                std::span<const double> penalty_factors) {
    require(count >= 1, ErrorCode::invalid_argument, "lambda grid needs at least one value");
    require(ratio > 0.0 && ratio < 1.0, ErrorCode::invalid_argument, "grid ratio must be in (0,1)");
    double top = lambda_max(x, y, penalty_factors);
    if (!(top > 0.0)) top = 1.0;  // y constant or design constant: any grid works
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        grid[i] = top * std::pow(ratio, t);
    }
    return grid;
}

double select_lambda_cv(const Eigen::MatrixXd& x, std::span<const double> y, std::size_t folds,
                        std::span<const double> grid, const LassoOptions& options) {
    check_inputs(x, y);
    require(folds >= 2, ErrorCode::invalid_argument, "cross-validation needs at least two folds");
    require(!grid.empty(), ErrorCode::invalid_argument, "empty lambda grid");
    if (grid.size() == 1) return grid.front();
    const auto n = static_cast<std::size_t>(x.rows());
    if (n / folds < 1) fail(ErrorCode::degenerate, "a cross-validation fold would be empty");

    // Path order: descending so warm starts move from sparse to dense.
    std::vector<std::size_t> order(grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

    std::vector<double> sse(grid.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (std::size_t i = 0; i < n; ++i) (i % folds == f ? test : train).push_back(static_cast<Eigen::Index>(i));
        if (train.size() < 2) fail(ErrorCode::degenerate, "a training fold has fewer than two rows");
        Eigen::MatrixXd xt = x(train, Eigen::all);
        std::vector<double> yt;
        for (auto i : train) yt.push_back(y[static_cast<std::size_t>(i)]);
        const Eigen::MatrixXd xv = x(test, Eigen::all);
        const Standardized s = standardize(xt, yt);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
        for (std::size_t g : order) {
            descend(s, grid[g], beta, options, nullptr);
            const LassoFit fit = unstandardize(s, beta, grid[g]);
            const auto pred = predict(fit, xv);
            for (std::size_t t = 0; t < test.size(); ++t) {
                const double e = pred[t] - y[static_cast<std::size_t>(test[t])];
                sse[g] += e * e;
            }
        }
    }
    std::size_t best = order.front();
    for (std::size_t g : order)
        if (sse[g] < sse[best]) best = g;  // strict: ties keep the larger lambda
    return grid[best];
}

LassoFit fit_lasso_cv(const Eigen::MatrixXd& x, std::span<const double> y, std::size_t folds,
                      std::size_t grid_size, const LassoOptions& options) {
    const auto grid = lambda_grid(x, y, grid_size, 1e-3, options.penalty_factors);
    const std::size_t usable_folds = std::min<std::size_t>(folds, static_cast<std::size_t>(x.rows()) / 2);
    const double lambda =
        usable_folds >= 2 ? select_lambda_cv(x, y, usable_folds, grid, options) : grid.front();
    return fit_lasso(x, y, lambda, options);
}

}  // namespace amol
