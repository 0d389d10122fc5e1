#include "amol/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "amol/error.hpp"
#include "amol/rng.hpp"

namespace amol {

const char* method_name(Method m) {
    switch (m) {
        case Method::qlearning: return "qlearn";
        case Method::olearning: return "olearn";
        case Method::amol_simple: return "amol";
        case Method::amol_efficient: return "amol-eff";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    if (name == "qlearn") return Method::qlearning;
    if (name == "olearn") return Method::olearning;
    if (name == "amol") return Method::amol_simple;
    if (name == "amol-eff") return Method::amol_efficient;
    fail(ErrorCode::invalid_argument, "unknown method '" + name + "'");
}

std::vector<double> default_cost_grid() {
    std::vector<double> grid;
    for (int e = -5; e <= 9; e += 2) grid.push_back(std::ldexp(1.0, e));
    return grid;
}

// ---------------------------------------------------------------------------

std::vector<double> stage_design_row(std::span<const double> h, int action) {
    std::vector<double> row;
    row.reserve(2 * h.size() + 1);
    row.insert(row.end(), h.begin(), h.end());
    row.push_back(action);
    for (double v : h) row.push_back(action * v);
    return row;
}

double StageRegression::predict(std::span<const double> h, int action) const {
    if (h.size() != history_dim)
        fail(ErrorCode::dimension_mismatch, "stage regression expects a history of length " +
                                                std::to_string(history_dim));
    const auto& c = fit.coefficients;
    double v = fit.intercept + c[history_dim] * action;
    for (std::size_t d = 0; d < history_dim; ++d)
        v += h[d] * (c[d] + action * c[history_dim + 1 + d]);
    return v;
}

double StageRegression::best_value(std::span<const double> h) const {
    return std::max(predict(h, 1), predict(h, -1));
}

LinearRule StageRegression::contrast_rule() const {
    const auto& c = fit.coefficients;
    LinearRule rule{2.0 * c[history_dim], std::vector<double>(history_dim)};
    for (std::size_t d = 0; d < history_dim; ++d) rule.coefficients[d] = 2.0 * c[history_dim + 1 + d];
    return rule;
}

StageRegression fit_stage_regression(const std::vector<std::vector<double>>& histories,
                                     std::span<const int> actions, std::span<const double> targets,
                                     const LearnerConfig& config) {
    require(histories.size() == actions.size() && actions.size() == targets.size(),
            ErrorCode::dimension_mismatch, "stage regression inputs differ in length");
    if (histories.size() < 2)
        fail(ErrorCode::degenerate, "stage regression needs at least two eligible subjects");
    const std::size_t dim = histories.front().size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(histories.size()), static_cast<Eigen::Index>(2 * dim + 1));
    for (std::size_t i = 0; i < histories.size(); ++i) {
        const auto row = stage_design_row(histories[i], actions[i]);
        for (std::size_t c = 0; c < row.size(); ++c)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
    LassoOptions opt;
    if (!config.penalize_treatment) {
        opt.penalty_factors.assign(2 * dim + 1, 1.0);
        opt.penalty_factors[dim] = 0.0;
    }
    return {fit_lasso_cv(x, targets, config.lasso_folds, config.lasso_grid_size, opt), dim};
}

namespace {

std::vector<std::size_t> eligible_subjects(std::span<const Trajectory> data, std::size_t stage) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data[i].stages[stage].eligible) out.push_back(i);
    if (out.empty())
        fail(ErrorCode::degenerate, "no eligible subjects at stage " + std::to_string(stage + 1));
    return out;
}

template <class T>
std::vector<T> pick(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all[i]);
    return out;
}

std::vector<int> stage_actions(std::span<const Trajectory> data, std::size_t stage) {
    std::vector<int> a;
    for (const auto& t : data) a.push_back(t.stages[stage].action);
    return a;
}

}  // namespace

QChain fit_q_chain(std::span<const Trajectory> data, const LearnerConfig& config) {
    const auto dims = dataset_feature_dims(data);
    const std::size_t K = dims.size();
    QChain chain{config.scheme, std::vector<StageRegression>(K)};
    std::vector<double> future(data.size(), 0.0);
    for (std::size_t k = K; k-- > 0;) {
        const auto hist = stage_histories(data, k, config.scheme);
        const auto actions = stage_actions(data, k);
        std::vector<double> target(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) target[i] = data[i].stages[k].reward + future[i];
        const auto subj = eligible_subjects(data, k);
        chain.stages[k] = fit_stage_regression(pick(hist, subj), pick(actions, subj), pick(target, subj), config);
        for (std::size_t i = 0; i < data.size(); ++i)
            future[i] = data[i].stages[k].eligible ? chain.stages[k].best_value(hist[i]) : target[i];
    }
    return chain;
}

// ---------------------------------------------------------------------------

PseudoOutcome simple_pseudo_outcome(const Trajectory& traj, std::size_t stage,
                                    std::span<const int> recommended, double g_k) {
    const std::size_t K = traj.num_stages();
    require(stage < K, ErrorCode::invalid_argument, "pseudo-outcome stage out of range");
    require(recommended.size() == K - stage, ErrorCode::dimension_mismatch,
            "recommended actions must cover every stage from k on");
    double followed = 1.0;
    double prob = 1.0;
    double total = 0.0;
    for (std::size_t j = stage; j < K; ++j) {
        const auto& s = traj.stages[j];
        if (s.eligible && s.action != recommended[j - stage]) followed = 0.0;
        prob *= s.effective_propensity();
        total += s.reward;
    }
    require(prob > 0.0, ErrorCode::numerical, "zero propensity in pseudo-outcome");
    PseudoOutcome out;
    out.ipw_term = followed * total / prob;
    out.augmentation_term = -(followed - prob) / prob * g_k;
    out.value = out.ipw_term + out.augmentation_term;
    return out;
}

PseudoOutcome efficient_pseudo_outcome(const Trajectory& traj, std::size_t stage,
                                       std::span<const int> recommended,
                                       const std::function<double(std::size_t)>& m,
                                       bool literal_boundary) {
    const std::size_t K = traj.num_stages();
    require(stage < K, ErrorCode::invalid_argument, "pseudo-outcome stage out of range");
    require(recommended.size() == K - stage, ErrorCode::dimension_mismatch,
            "recommended actions must cover every stage from k on");
    // M_j: followed the rules on stages k..j; P_j: probability of that under the design.
    double m_prev = literal_boundary ? 0.0 : 1.0;
    double followed = 1.0;
    double p_follow = 1.0;
    double total = 0.0;
    PseudoOutcome out;
    for (std::size_t j = stage; j < K; ++j) {
        const auto& s = traj.stages[j];
        const bool match = !s.eligible || s.action == recommended[j - stage];
        const double p_rec = !s.eligible ? 1.0 : (match ? s.propensity : 1.0 - s.propensity);
        require(p_rec > 0.0, ErrorCode::numerical, "zero propensity in pseudo-outcome");
        followed *= match ? 1.0 : 0.0;
        p_follow *= p_rec;
        const double coarsened = m_prev - followed;  // C_j
        const double weight = (coarsened - (1.0 - p_rec) * m_prev) / p_follow;
        if (weight != 0.0) out.augmentation_term += weight * m(j);
        m_prev = followed;
        total += s.reward;
    }
    out.ipw_term = followed * total / p_follow;
    out.value = out.ipw_term + out.augmentation_term;
    return out;
}

PseudoOutcome augmented_pseudo_outcome(const Trajectory& traj, std::size_t stage,
                                       std::span<const DecisionRule> rules,
                                       const HistoryScheme& scheme, const StageValueFn& g_hat,
                                       AugmentationVariant variant, bool literal_boundary) {
    const std::size_t K = traj.num_stages();
    if (stage >= K || rules.size() != K)
        fail(ErrorCode::invalid_argument, "pseudo-outcome stage or rule count out of range");
    std::vector<std::vector<double>> hist;
    std::vector<int> rec;
    for (std::size_t j = stage; j < K; ++j) {
        hist.push_back(build_history(traj, j, scheme).values);
        rec.push_back(traj.stages[j].eligible ? decide(rules[j], hist.back()) : traj.stages[j].action);
    }
    if (variant == AugmentationVariant::simple)
        return simple_pseudo_outcome(traj, stage, rec, g_hat(stage, hist.front()));
    auto m = [&](std::size_t j) {
        double v = g_hat(j, hist[j - stage]);
        for (std::size_t s = stage; s < j; ++s) v += traj.stages[s].reward;
        return v;
    };
    return efficient_pseudo_outcome(traj, stage, rec, m, literal_boundary);
}

// ---------------------------------------------------------------------------

CostSelection cross_validate_cost(std::span<const WeightedSample> samples,
                                  const SolverConfig& base, std::span<const double> cost_grid,
                                  std::size_t folds, std::uint64_t seed) {
    require(!cost_grid.empty(), ErrorCode::invalid_argument, "empty cost grid");
    std::vector<double> grid(cost_grid.begin(), cost_grid.end());
    std::sort(grid.begin(), grid.end());
    for (double c : grid) require(c > 0.0, ErrorCode::invalid_argument, "costs must be positive");
    CostSelection sel;
    if (grid.size() == 1) {
        sel.cost = grid.front();
        sel.curve.push_back({grid.front(), 0.0});
        return sel;
    }
    require(folds >= 2, ErrorCode::invalid_argument, "cost selection needs at least two folds");
    if (samples.size() < folds)
        fail(ErrorCode::degenerate, "fewer usable subjects than cost-selection folds");

    std::vector<std::size_t> perm(samples.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> fold_of(samples.size());
    for (std::size_t p = 0; p < perm.size(); ++p) fold_of[perm[p]] = p % folds;

    std::vector<double> score(grid.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<WeightedSample> train;
        std::vector<const WeightedSample*> test;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (fold_of[i] == f)
                test.push_back(&samples[i]);
            else
                train.push_back(samples[i]);
        }
        const bool trainable = std::any_of(train.begin(), train.end(),
                                           [](const WeightedSample& s) { return s.weight != 0.0; });
        std::vector<WsvmFit> path;
        if (trainable) path = fit_weighted_svm_path(train, base, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const DecisionRule rule =
                trainable ? path[g].rule
                          : DecisionRule{LinearRule{1.0, std::vector<double>(samples.front().history.size(), 0.0)}};
            double s = 0.0;
            for (const auto* t : test)
                if (decide(rule, t->history) == t->action) s += t->weight;
            score[g] += s / static_cast<double>(test.size());
        }
    }
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        sel.curve.push_back({grid[g], score[g] / static_cast<double>(folds)});
        if (score[g] > score[best]) best = g;  // strict: ties keep the smaller cost
    }
    sel.cost = grid[best];
    return sel;
}

// ---------------------------------------------------------------------------

namespace {

const char* status_name(SolverStatus s) {
    switch (s) {
        case SolverStatus::converged: return "converged";
        case SolverStatus::single_class: return "single_class";
        case SolverStatus::no_convergence: return "no_convergence";
    }
    return "?";
}

KernelSpec resolve_kernel(const KernelChoice& choice, const std::vector<WeightedSample>& samples) {
    if (choice.kind == KernelSpec::Kind::linear) return KernelSpec::linear();
    if (choice.bandwidth) return KernelSpec::gaussian(*choice.bandwidth);
    std::vector<std::vector<double>> pts;
    for (const auto& s : samples) pts.push_back(s.history);
    return KernelSpec::gaussian(median_pairwise_distance(pts));
}

// Column scales (population sd, 1 for constant columns) and the max |weight|.
struct SolverScaling {
    std::vector<double> column;
    double weight = 1.0;
};

SolverScaling solver_scaling(const std::vector<WeightedSample>& samples, const LearnerConfig& config) {
    SolverScaling sc;
    const std::size_t dim = samples.empty() ? 0 : samples.front().history.size();
    sc.column.assign(dim, 1.0);
    if (config.standardize && samples.size() > 1) {
        const double n = static_cast<double>(samples.size());
        for (std::size_t d = 0; d < dim; ++d) {
            double mean = 0.0;
            for (const auto& s : samples) mean += s.history[d];
            mean /= n;
            double ss = 0.0;
            for (const auto& s : samples) ss += (s.history[d] - mean) * (s.history[d] - mean);
            const double sd = std::sqrt(ss / n);
            if (sd > 1e-12 * (1.0 + std::abs(mean))) sc.column[d] = sd;
        }
    }
    if (config.normalize_weights) {
        double m = 0.0;
        for (const auto& s : samples) m = std::max(m, std::abs(s.weight));
        if (m > 0.0) sc.weight = m;
    }
    return sc;
}

// The intercept absorbs any centring, so scaling the columns is enough; the
// linear rule is mapped back to the original inputs.
DecisionRule unscale_rule(DecisionRule rule, const SolverScaling& sc) {
    if (auto* lin = std::get_if<LinearRule>(&rule)) {
        for (std::size_t d = 0; d < lin->coefficients.size(); ++d) lin->coefficients[d] /= sc.column[d];
        return rule;
    }
    auto& ker = std::get<KernelRule>(rule);
    if (std::any_of(sc.column.begin(), sc.column.end(), [](double v) { return v != 1.0; }))
        ker.input_scale = sc.column;
    return rule;
}

DecisionRule fit_stage_rule(const StageProblem& problem, const LearnerConfig& config,
                            StageDiagnostics& diag) {
    const SolverScaling sc = solver_scaling(problem.samples, config);
    std::vector<WeightedSample> scaled = problem.samples;
    for (auto& s : scaled) {
        for (std::size_t d = 0; d < s.history.size(); ++d) s.history[d] /= sc.column[d];
        s.weight /= sc.weight;
    }
    SolverConfig solver;
    solver.kernel = resolve_kernel(config.kernel, scaled);
    solver.kkt_tolerance = config.kkt_tolerance;
    solver.max_passes = config.max_passes;
    const CostSelection sel =
        cross_validate_cost(scaled, solver, config.cost_grid, config.cost_folds,
                            derive_seed(config.seed, {stream::folds, problem.stage}));
    solver.cost = sel.cost;
    WsvmFit fit = fit_weighted_svm(scaled, solver);
    fit.rule = unscale_rule(std::move(fit.rule), sc);

    diag.samples = problem.samples.size();
    diag.support_vectors = fit.support_vectors;
    diag.cost = sel.cost;
    diag.cost_curve = sel.curve;
    diag.recentre_lambda = problem.recentre_lambda;
    diag.solver_status = status_name(fit.status);
    std::size_t negative = 0;
    for (const auto& s : problem.samples)
        if (s.weight < 0.0) ++negative;
    diag.negative_weight_fraction =
        problem.samples.empty() ? 0.0
                                : static_cast<double>(negative) / static_cast<double>(problem.samples.size());
    return std::move(fit.rule);
}

bool follows_from(const Trajectory& t, std::size_t stage, const std::vector<DecisionRule>& rules,
                  const HistoryScheme& scheme) {
    for (std::size_t j = stage; j < t.num_stages(); ++j) {
        const auto& s = t.stages[j];
        if (s.eligible && s.action != decide(rules[j], build_history(t, j, scheme))) return false;
    }
    return true;
}

StageProblem olearning_problem(std::span<const Trajectory> data, const LearnerConfig& config,
                               const std::vector<DecisionRule>& rules, std::size_t k) {
    StageProblem p;
    p.stage = k;
    std::vector<double> future;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& t = data[i];
        if (!t.stages[k].eligible || !follows_from(t, k + 1, rules, config.scheme)) continue;
        p.subjects.push_back(i);
        double sum = 0.0;
        for (std::size_t j = k; j < t.num_stages(); ++j) sum += t.stages[j].reward;
        future.push_back(sum);
    }
    if (p.subjects.empty())
        fail(ErrorCode::degenerate, "no subject follows the estimated rules after stage " +
                                        std::to_string(k + 1));
    double shift = *std::min_element(future.begin(), future.end());
    if (config.olearning_shift == OLearningShift::only_if_negative) shift = std::min(shift, 0.0);
    for (std::size_t n = 0; n < p.subjects.size(); ++n) {
        const auto& t = data[p.subjects[n]];
        double prob = 1.0;
        for (std::size_t j = k; j < t.num_stages(); ++j) prob *= t.stages[j].effective_propensity();
        p.samples.push_back({build_history(t, k, config.scheme).values, t.stages[k].action,
                             (future[n] - shift) / prob});
    }
    return p;
}

// Solver input for AMOL at stage k given the current targets R_k + Q_{k+1}.
StageProblem amol_problem(std::span<const Trajectory> data, const LearnerConfig& config,
                          const std::vector<double>& target, std::size_t k) {
    StageProblem p;
    p.stage = k;
    p.subjects = eligible_subjects(data, k);
    const auto hist = pick(stage_histories(data, k, config.scheme), p.subjects);
    const auto y = pick(target, p.subjects);
    std::vector<double> centre(y.size(), 0.0);
    if (config.recentre && y.size() >= 2) {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(hist.size()),
                          static_cast<Eigen::Index>(hist.front().size()));
        for (std::size_t i = 0; i < hist.size(); ++i)
            for (std::size_t d = 0; d < hist[i].size(); ++d)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = hist[i][d];
        if (x.cols() > 0) {
            const LassoFit s = fit_lasso_cv(x, y, config.lasso_folds, config.lasso_grid_size);
            centre = predict(s, x);
            p.recentre_lambda = s.lambda;
        } else {
            const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
            std::fill(centre.begin(), centre.end(), mean);
        }
    }
    for (std::size_t n = 0; n < p.subjects.size(); ++n) {
        const auto& s = data[p.subjects[n]].stages[k];
        p.samples.push_back({hist[n], s.action, (y[n] - centre[n]) / s.effective_propensity()});
    }
    return p;
}

struct PipelineResult {
    FitReport report;
    std::optional<StageProblem> stopped;
};

PipelineResult run_weighted(Method method, std::span<const Trajectory> data,
                            const LearnerConfig& config, std::optional<std::size_t> stop_stage) {
    const auto dims = dataset_feature_dims(data);
    const std::size_t K = dims.size();
    if (stop_stage && *stop_stage >= K) fail(ErrorCode::invalid_argument, "stage out of range");
    PipelineResult out;
    auto& report = out.report;
    report.method = method;
    report.regimen.scheme = config.scheme;
    report.regimen.rules.assign(K, LinearRule{});
    report.stages.assign(K, {});
    auto& rules = report.regimen.rules;

    const bool amol = method == Method::amol_simple || method == Method::amol_efficient;
    std::optional<QChain> chain;
    if (amol && K > 1) chain = fit_q_chain(data, config);
    const auto variant = method == Method::amol_efficient ? AugmentationVariant::efficient
                                                          : AugmentationVariant::simple;

    std::vector<double> target(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) target[i] = data[i].stages[K - 1].reward;

    for (std::size_t k = K; k-- > 0;) {
        StageProblem problem = amol ? amol_problem(data, config, target, k)
                                    : olearning_problem(data, config, rules, k);
        if (stop_stage && *stop_stage == k) {
            out.stopped = std::move(problem);
            return out;
        }
        rules[k] = fit_stage_rule(problem, config, report.stages[k]);
        if (amol && k > 0) {
            report.stages[k].lambda = chain->stages[k].fit.lambda;
            const StageValueFn g = [&](std::size_t j, std::span<const double> h) { return chain->g(j, h); };
            for (std::size_t i = 0; i < data.size(); ++i) {
                const auto q = augmented_pseudo_outcome(data[i], k, rules, config.scheme, g, variant,
                                                        config.literal_boundary);
                target[i] = data[i].stages[k - 1].reward + q.value;
            }
        } else if (amol && chain) {
            report.stages[k].lambda = chain->stages[k].fit.lambda;
        }
    }
    return out;
}

}  // namespace

FitReport fit_qlearning(std::span<const Trajectory> data, const LearnerConfig& config) {
    const QChain chain = fit_q_chain(data, config);
    FitReport report;
    report.method = Method::qlearning;
    report.regimen.scheme = config.scheme;
    for (std::size_t k = 0; k < chain.stages.size(); ++k) {
        report.regimen.rules.push_back(chain.stages[k].contrast_rule());
        StageDiagnostics d;
        d.lambda = chain.stages[k].fit.lambda;
        for (const auto& t : data)
            if (t.stages[k].eligible) ++d.samples;
        d.solver_status = "regression";
        report.stages.push_back(std::move(d));
    }
    return report;
}

FitReport fit_olearning(std::span<const Trajectory> data, const LearnerConfig& config) {
    return run_weighted(Method::olearning, data, config, std::nullopt).report;
}

FitReport fit_amol_simple(std::span<const Trajectory> data, const LearnerConfig& config) {
    return run_weighted(Method::amol_simple, data, config, std::nullopt).report;
}

FitReport fit_amol_efficient(std::span<const Trajectory> data, const LearnerConfig& config) {
    return run_weighted(Method::amol_efficient, data, config, std::nullopt).report;
}

FitReport fit(Method method, std::span<const Trajectory> data, const LearnerConfig& config) {
    switch (method) {
        case Method::qlearning: return fit_qlearning(data, config);
        case Method::olearning: return fit_olearning(data, config);
        case Method::amol_simple: return fit_amol_simple(data, config);
        case Method::amol_efficient: return fit_amol_efficient(data, config);
    }
    fail(ErrorCode::invalid_argument, "unknown method");
}

StageProblem stage_problem(Method method, std::span<const Trajectory> data,
                           const LearnerConfig& config, std::size_t stage) {
    require(method != Method::qlearning, ErrorCode::invalid_argument,
            "Q-learning has no weighted classification stage");
    return *run_weighted(method, data, config, stage).stopped;
}

}  // namespace amol
