#include "amol/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "amol/error.hpp"

namespace amol {

KernelSpec KernelSpec::gaussian(double sigma) {
    require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::invalid_argument,
            "gaussian bandwidth must be positive and finite");
    return {Kind::gaussian, sigma};
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        fail(ErrorCode::dimension_mismatch, "kernel arguments differ in dimension (" +
                                                std::to_string(x.size()) + " vs " +
                                                std::to_string(y.size()) + ")");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            fail(ErrorCode::numerical, "non-finite kernel argument");
}

double unchecked_eval(const KernelSpec& spec, std::span<const double> x,
                      std::span<const double> y) {
    double acc = 0.0;
    if (spec.kind == KernelSpec::Kind::linear) {
        for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
        return acc;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return std::exp(-acc / (2.0 * spec.bandwidth * spec.bandwidth));
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    return unchecked_eval(spec, x, y);
}

Eigen::MatrixXd gram(const KernelSpec& spec, const std::vector<std::vector<double>>& points) {
    require(!points.empty(), ErrorCode::invalid_argument, "gram of an empty point set");
    const auto n = static_cast<Eigen::Index>(points.size());
    for (const auto& p : points) check_pair(points.front(), p);

    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = unchecked_eval(spec, points[i], points[j]);
            g(i, j) = v;
            g(j, i) = v;
        }
        if (spec.kind == KernelSpec::Kind::gaussian) g(i, i) = 1.0;
    }
    return g;
}

double median_pairwise_distance(const std::vector<std::vector<double>>& points) {
    std::vector<double> dists;
    dists.reserve(points.size() * (points.size() - (points.empty() ? 0 : 1)) / 2);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            check_pair(points[i], points[j]);
            double acc = 0.0;
            for (std::size_t d = 0; d < points[i].size(); ++d) {
                const double diff = points[i][d] - points[j][d];
                acc += diff * diff;
            }
            dists.push_back(std::sqrt(acc));
        }
    }
    if (dists.empty()) return 1.0;
    const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    double med = *mid;
    if (dists.size() % 2 == 0) med = 0.5 * (med + *std::max_element(dists.begin(), mid));
    return med > 0.0 ? med : 1.0;
}

}  // namespace amol
