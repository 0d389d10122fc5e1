#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace amol {

struct KernelSpec {
    enum class Kind { linear, gaussian };

    Kind kind = Kind::linear;
    double bandwidth = 1.0;  // sigma, gaussian only

    static KernelSpec linear() { return {}; }
    static KernelSpec gaussian(double sigma);

    bool operator==(const KernelSpec&) const = default;
};

// Linear: <x, y>.  Gaussian: exp(-|x - y|^2 / (2 sigma^2)).
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

Eigen::MatrixXd gram(const KernelSpec& spec, const std::vector<std::vector<double>>& points);

/// Median of the pairwise Euclidean distances; the default gaussian bandwidth.
/// Returns 1 when every pair coincides.
double median_pairwise_distance(const std::vector<std::vector<double>>& points);

}  // namespace amol
