#include "amol/wsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "amol/error.hpp"

namespace amol {

namespace {

constexpr double tau = 1e-12;

struct Problem {
    std::vector<std::size_t> index;  // into the caller's samples
    std::vector<std::vector<double>> points;
    std::vector<double> label;
    std::vector<double> cap;
};

Problem make_problem(std::span<const WeightedSample> samples, double cost) {
    Problem p;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.action != 1 && s.action != -1)
            fail(ErrorCode::invalid_argument, "sample action must be -1 or +1");
        if (!std::isfinite(s.weight)) fail(ErrorCode::numerical, "non-finite sample weight");
        if (s.weight == 0.0) continue;
        p.index.push_back(i);
        p.points.push_back(s.history);
        p.label.push_back(static_cast<double>(s.action * sign_of(s.weight)));
        p.cap.push_back(cost * std::abs(s.weight));
    }
    return p;
}

// Labelled gram: Q_ij = l_i l_j K_ij.
Eigen::MatrixXd labelled_gram(const Problem& p, const KernelSpec& kernel) {
    Eigen::MatrixXd q = gram(kernel, p.points);
    for (Eigen::Index i = 0; i < q.rows(); ++i)
        for (Eigen::Index j = 0; j < q.cols(); ++j) q(i, j) *= p.label[i] * p.label[j];
    return q;
}

bool in_up(double y, double a, double c) { return (y > 0 && a < c) || (y < 0 && a > 0); }
bool in_low(double y, double a, double c) { return (y > 0 && a > 0) || (y < 0 && a < c); }

// Bias from KKT: average over free vectors, else midpoint of the feasible interval.
double kkt_bias(const Problem& p, const std::vector<double>& alpha, const Eigen::VectorXd& grad) {
    double sum_free = 0.0;
    std::size_t n_free = 0;
    double lb = -std::numeric_limits<double>::infinity();
    double ub = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double r = -p.label[i] * grad[static_cast<Eigen::Index>(i)];
        const bool at_zero = alpha[i] <= 0.0;
        const bool at_cap = alpha[i] >= p.cap[i];
        if (!at_zero && !at_cap) {
            sum_free += r;
            ++n_free;
        } else if ((at_zero && p.label[i] > 0) || (at_cap && p.label[i] < 0)) {
            lb = std::max(lb, r);
        } else {
            ub = std::min(ub, r);
        }
    }
    if (n_free > 0) return sum_free / static_cast<double>(n_free);
    if (std::isfinite(lb) && std::isfinite(ub)) return 0.5 * (lb + ub);
    if (std::isfinite(lb)) return lb;
    if (std::isfinite(ub)) return ub;
    return 0.0;
}

DecisionRule make_rule(const Problem& p, const std::vector<double>& alpha, double bias,
                       const KernelSpec& kernel) {
    const std::size_t dim = p.points.empty() ? 0 : p.points.front().size();
    if (kernel.kind == KernelSpec::Kind::linear) {
        LinearRule rule{bias, std::vector<double>(dim, 0.0)};
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (alpha[i] <= 0.0) continue;
            const double m = alpha[i] * p.label[i];
            for (std::size_t d = 0; d < dim; ++d) rule.coefficients[d] += m * p.points[i][d];
        }
        return rule;
    }
    KernelRule rule;
    rule.bias = bias;
    rule.kernel = kernel;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] <= 0.0) continue;
        rule.support.push_back(p.points[i]);
        rule.multipliers.push_back(alpha[i] * p.label[i]);
    }
    return rule;
}

}  // namespace

WsvmFit fit_weighted_svm(std::span<const WeightedSample> samples, const SolverConfig& config,
                         bool trace_objective, std::span<const double> warm_start) {
    require(config.cost > 0.0 && std::isfinite(config.cost), ErrorCode::invalid_argument,
            "solver cost must be positive");
    require(config.kkt_tolerance > 0.0, ErrorCode::invalid_argument,
            "kkt tolerance must be positive");
    const Problem p = make_problem(samples, config.cost);
    if (p.index.empty()) fail(ErrorCode::degenerate, "all sample weights are zero");

    WsvmFit fit;
    fit.dual.alphas.assign(samples.size(), 0.0);
    const std::size_t n = p.index.size();
    const std::size_t dim = p.points.front().size();
    for (const auto& x : p.points)
        if (x.size() != dim) fail(ErrorCode::dimension_mismatch, "sample histories differ in length");

    const bool single = std::all_of(p.label.begin(), p.label.end(),
                                    [&](double l) { return l == p.label.front(); });
    if (single) {
        fit.status = SolverStatus::single_class;
        fit.dual.bias = p.label.front();
        if (config.kernel.kind == KernelSpec::Kind::linear)
            fit.rule = LinearRule{p.label.front(), std::vector<double>(dim, 0.0)};
        else
            fit.rule = KernelRule{{}, {}, p.label.front(), config.kernel, {}};
        return fit;
    }

    const Eigen::MatrixXd q = labelled_gram(p, config.kernel);
    std::vector<double> alpha(n, 0.0);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), -1.0);
    const auto& y = p.label;
    const auto& c = p.cap;
    if (!warm_start.empty()) {
        require(warm_start.size() == samples.size(), ErrorCode::dimension_mismatch,
                "warm start size differs from sample count");
        for (std::size_t t = 0; t < n; ++t) {
            alpha[t] = std::clamp(warm_start[p.index[t]], 0.0, c[t]);
            if (alpha[t] > 0.0) grad.noalias() += q.col(static_cast<Eigen::Index>(t)) * alpha[t];
        }
    }
    auto objective = [&] {
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) acc += alpha[t] * (grad[static_cast<Eigen::Index>(t)] - 1.0);
        return -0.5 * acc;
    };
    if (trace_objective) fit.objective_trace.push_back(objective());

    // Second-order working-set selection over an active set; variables stuck
    // at a bound are shrunk periodically and restored before declaring
    // convergence. Stop when the maximal violating pair gap reaches the tolerance.
    const double gap_target = config.kkt_tolerance;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> active = all;
    const std::size_t shrink_every = std::min<std::size_t>(n, 1000);
    std::size_t countdown = shrink_every;
    bool restored = false;
    auto shrink = [&] {
        double up = -std::numeric_limits<double>::infinity();
        double low = -std::numeric_limits<double>::infinity();
        for (std::size_t t : active) {
            const double v = -y[t] * grad[static_cast<Eigen::Index>(t)];
            if (in_up(y[t], alpha[t], c[t])) up = std::max(up, v);
            if (in_low(y[t], alpha[t], c[t])) low = std::max(low, -v);
        }
        std::erase_if(active, [&](std::size_t t) {
            const double g = grad[static_cast<Eigen::Index>(t)];
            if (alpha[t] >= c[t]) return y[t] > 0 ? -g > up : -g > low;
            if (alpha[t] <= 0.0) return y[t] > 0 ? g > low : g > up;
            return false;
        });
    };

    bool converged = false;
    std::size_t iter = 0;
    while (iter < config.max_passes) {
        if (--countdown == 0) {
            countdown = shrink_every;
            shrink();
        }
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t : active) {
            const double v = -y[t] * grad[static_cast<Eigen::Index>(t)];
            if (in_up(y[t], alpha[t], c[t]) && v > gmax) {
                gmax = v;
                i = t;
            }
        }
        if (i != n) {
            const auto qi = static_cast<Eigen::Index>(i);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t t : active) {
                if (!in_low(y[t], alpha[t], c[t])) continue;
                const auto tt = static_cast<Eigen::Index>(t);
                const double v = -y[t] * grad[tt];
                gmin = std::min(gmin, v);
                const double b = gmax - v;
                if (b <= 0.0) continue;
                double a = q(qi, qi) + q(tt, tt) - 2.0 * y[i] * y[t] * q(qi, tt);
                if (a <= 0.0) a = tau;
                const double score = -(b * b) / a;
                if (score < best) {
                    best = score;
                    j = t;
                }
            }
        }
        const bool done = i == n || j == n || gmax - gmin <= gap_target;
        if (!restored && (done || gmax - gmin <= 10.0 * gap_target)) {
            restored = true;
            if (active.size() < n) {
                active = all;
                countdown = shrink_every;
                continue;
            }
        }
        if (done) {
            if (active.size() < n) {
                active = all;
                countdown = shrink_every;
                continue;
            }
            converged = true;
            break;
        }
        ++iter;

        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        const double old_i = alpha[i];
        const double old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = q(ii, ii) + q(jj, jj) + 2.0 * q(ii, jj);
            if (quad <= 0.0) quad = tau;
            const double delta = (-grad[ii] - grad[jj]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > c[i] - c[j]) {
                if (alpha[i] > c[i]) {
                    alpha[i] = c[i];
                    alpha[j] = c[i] - diff;
                }
            } else if (alpha[j] > c[j]) {
                alpha[j] = c[j];
                alpha[i] = c[j] + diff;
            }
        } else {
            double quad = q(ii, ii) + q(jj, jj) - 2.0 * q(ii, jj);
            if (quad <= 0.0) quad = tau;
            const double delta = (grad[ii] - grad[jj]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c[i]) {
                if (alpha[i] > c[i]) {
                    alpha[i] = c[i];
                    alpha[j] = sum - c[i];
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c[j]) {
                if (alpha[j] > c[j]) {
                    alpha[j] = c[j];
                    alpha[i] = sum - c[j];
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        alpha[i] = std::clamp(alpha[i], 0.0, c[i]);
        alpha[j] = std::clamp(alpha[j], 0.0, c[j]);

        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        grad.noalias() += q.col(ii) * di + q.col(jj) * dj;
        if (trace_objective) fit.objective_trace.push_back(objective());
    }

    fit.iterations = iter;
    fit.status = converged ? SolverStatus::converged : SolverStatus::no_convergence;
    const double bias = kkt_bias(p, alpha, grad);
    for (std::size_t t = 0; t < n; ++t) {
        fit.dual.alphas[p.index[t]] = alpha[t];
        if (alpha[t] > 0.0) ++fit.support_vectors;
    }
    fit.dual.bias = bias;
    fit.dual.objective = objective();
    fit.rule = make_rule(p, alpha, bias, config.kernel);
    return fit;
}

std::vector<WsvmFit> fit_weighted_svm_path(std::span<const WeightedSample> samples,
                                           const SolverConfig& base, std::span<const double> costs) {
    require(std::is_sorted(costs.begin(), costs.end()), ErrorCode::invalid_argument,
            "cost path must be ascending");
    std::vector<WsvmFit> out;
    out.reserve(costs.size());
    bool saturated = false;
    for (double cost : costs) {
        if (saturated) {
            out.push_back(out.back());
            continue;
        }
        SolverConfig cfg = base;
        cfg.cost = cost;
        std::span<const double> warm;
        if (!out.empty()) warm = out.back().dual.alphas;
        out.push_back(fit_weighted_svm(samples, cfg, false, warm));
        const WsvmFit& f = out.back();
        if (f.status == SolverStatus::single_class) {
            saturated = true;
        } else if (f.status == SolverStatus::converged) {
            saturated = true;
            for (std::size_t i = 0; i < samples.size() && saturated; ++i)
                if (samples[i].weight != 0.0 && f.dual.alphas[i] >= cost * std::abs(samples[i].weight))
                    saturated = false;
        }
    }
    return out;
}

double dual_objective(std::span<const WeightedSample> samples, const KernelSpec& kernel,
                      std::span<const double> alphas) {
    require(alphas.size() == samples.size(), ErrorCode::dimension_mismatch,
            "alpha count differs from sample count");
    double linear = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (alphas[i] == 0.0) continue;
        linear += alphas[i];
        const double li = samples[i].action * sign_of(samples[i].weight);
        for (std::size_t j = 0; j < samples.size(); ++j) {
            if (alphas[j] == 0.0) continue;
            const double lj = samples[j].action * sign_of(samples[j].weight);
            quad += alphas[i] * alphas[j] * li * lj *
                    kernel_eval(kernel, samples[i].history, samples[j].history);
        }
    }
    return linear - 0.5 * quad;
}

double check_kkt(std::span<const WeightedSample> samples, const SolverConfig& config,
                 const DualSolution& solution) {
    require(solution.alphas.size() == samples.size(), ErrorCode::dimension_mismatch,
            "solution size differs from sample count");
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].weight == 0.0) continue;
        const double li = samples[i].action * sign_of(samples[i].weight);
        double f = solution.bias;
        for (std::size_t j = 0; j < samples.size(); ++j) {
            if (solution.alphas[j] == 0.0) continue;
            const double lj = samples[j].action * sign_of(samples[j].weight);
            f += solution.alphas[j] * lj *
                 kernel_eval(config.kernel, samples[j].history, samples[i].history);
        }
        const double margin = li * f;
        const double cap = config.cost * std::abs(samples[i].weight);
        const double a = solution.alphas[i];
        double v = 0.0;
        if (a <= 0.0)
            v = std::max(0.0, 1.0 - margin);
        else if (a >= cap)
            v = std::max(0.0, margin - 1.0);
        else
            v = std::abs(margin - 1.0);
        // Box feasibility counts as a violation too.
        if (a < 0.0) v = std::max(v, -a);
        if (a > cap) v = std::max(v, a - cap);
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace amol
