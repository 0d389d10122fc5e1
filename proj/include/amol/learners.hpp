#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amol/core_model.hpp"
#include "amol/lasso.hpp"
#include "amol/wsvm.hpp"

namespace amol {

enum class Method { qlearning, olearning, amol_simple, amol_efficient };

const char* method_name(Method m);  // "qlearn", "olearn", "amol", "amol-eff"
Method parse_method(const std::string& name);

/// Gaussian bandwidth left empty means the median pairwise distance of the
/// stage's training histories.
struct KernelChoice {
    KernelSpec::Kind kind = KernelSpec::Kind::linear;
    std::optional<double> bandwidth;
};

enum class OLearningShift {
    minimum,           // subtract the smallest future-reward sum (min weight is 0)
    only_if_negative,  // subtract it only when some sum is negative
};

/// {2^-5, 2^-3, ..., 2^9}
std::vector<double> default_cost_grid();

struct LearnerConfig {
    HistoryScheme scheme;
    KernelChoice kernel;
    std::vector<double> cost_grid = default_cost_grid();
    std::size_t cost_folds = 4;
    std::size_t lasso_folds = 5;
    std::size_t lasso_grid_size = 50;
    double kkt_tolerance = 1e-3;
    std::size_t max_passes = 100000;
    bool recentre = true;          // subtract the s_k regression in AMOL weights
    bool literal_boundary = false; // efficient AMOL with M_{k-1} = 0 as printed
    bool penalize_treatment = true; // lasso penalty on the A_k main effect of Q regressions
    bool standardize = true;       // scale history columns to unit sd before the solver
    bool normalize_weights = true; // scale stage weights to max |w| = 1 before the solver
    OLearningShift olearning_shift = OLearningShift::minimum;
    std::uint64_t seed = 0;        // fold assignment for cost selection
};

// ---------------------------------------------------------------------------
// Stage regression shared by Q-learning and the AMOL imputation model.

/// Lasso of a stage target on the design row (h, a, a*h).
struct StageRegression {
    LassoFit fit;
    std::size_t history_dim = 0;

    double predict(std::span<const double> h, int action) const;
    /// max over a in {-1,+1}
    double best_value(std::span<const double> h) const;
    /// argmax with ties to +1, as a linear rule on h
    LinearRule contrast_rule() const;
};

std::vector<double> stage_design_row(std::span<const double> h, int action);

StageRegression fit_stage_regression(const std::vector<std::vector<double>>& histories,
                                     std::span<const int> actions, std::span<const double> targets,
                                     const LearnerConfig& config);

/// Backward chain of stage regressions: stage K-1 regresses R_{K-1}; stage k
/// regresses R_k + g_{k+1}(H_{k+1}), g_j(h) = max_a of stage j's prediction.
struct QChain {
    HistoryScheme scheme;
    std::vector<StageRegression> stages;

    double g(std::size_t stage, std::span<const double> h) const { return stages[stage].best_value(h); }
};

QChain fit_q_chain(std::span<const Trajectory> data, const LearnerConfig& config);

// ---------------------------------------------------------------------------
// Pseudo-outcomes.

enum class AugmentationVariant { simple, efficient };

struct PseudoOutcome {
    double value = 0.0;
    double ipw_term = 0.0;
    double augmentation_term = 0.0;
};

/// Simple augmentation from stage k: recommended[j - k] is the rule's action at
/// stage j >= k, g_k the imputed optimal future value at H_k.
PseudoOutcome simple_pseudo_outcome(const Trajectory& traj, std::size_t stage,
                                    std::span<const int> recommended, double g_k);

/// Monotone-coarsening augmentation from stage k; m(j) is the regressor for the
/// stage-j term (normally g_j(H_j) + R_k + ... + R_{j-1}).
PseudoOutcome efficient_pseudo_outcome(const Trajectory& traj, std::size_t stage,
                                       std::span<const int> recommended,
                                       const std::function<double(std::size_t)>& m,
                                       bool literal_boundary = false);

/// g_hat(j, H_j) evaluates the imputation model of stage j.
using StageValueFn = std::function<double(std::size_t, std::span<const double>)>;

/// Pseudo-outcome of Q_k under `rules` (a full K-stage list; stages >= k used).
PseudoOutcome augmented_pseudo_outcome(const Trajectory& traj, std::size_t stage,
                                       std::span<const DecisionRule> rules,
                                       const HistoryScheme& scheme, const StageValueFn& g_hat,
                                       AugmentationVariant variant,
                                       bool literal_boundary = false);

// ---------------------------------------------------------------------------
// Cost selection.

struct CostCvPoint {
    double cost = 0.0;
    double score = 0.0;  // mean held-out sum of weight * 1(A = rule(H)) per subject
};

struct CostSelection {
    double cost = 0.0;
    std::vector<CostCvPoint> curve;  // ascending cost
};

/// K-fold selection of the solver cost by held-out inverse-probability value
/// of the stage rule; ties go to the smaller cost.
CostSelection cross_validate_cost(std::span<const WeightedSample> samples,
                                  const SolverConfig& base, std::span<const double> cost_grid,
                                  std::size_t folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pipelines.

struct StageDiagnostics {
    std::size_t samples = 0;           // solver/regression rows at this stage
    std::size_t support_vectors = 0;
    double cost = 0.0;                 // selected solver cost (0 for Q-learning)
    double lambda = 0.0;               // lasso lambda of the stage regression
    double recentre_lambda = 0.0;      // lasso lambda of s_k (AMOL)
    double negative_weight_fraction = 0.0;
    std::string solver_status;         // converged | single_class | no_convergence | regression
    std::vector<CostCvPoint> cost_curve;
};

struct FitReport {
    Method method = Method::amol_simple;
    Regimen regimen;
    std::vector<StageDiagnostics> stages;
};

/// Inputs handed to the solver at one stage; exposed for tests and the `cv`
/// command.
struct StageProblem {
    std::size_t stage = 0;
    std::vector<std::size_t> subjects;  // dataset indices
    std::vector<WeightedSample> samples;
    double recentre_lambda = 0.0;
};

FitReport fit_qlearning(std::span<const Trajectory> data, const LearnerConfig& config);
FitReport fit_olearning(std::span<const Trajectory> data, const LearnerConfig& config);
FitReport fit_amol_simple(std::span<const Trajectory> data, const LearnerConfig& config);
FitReport fit_amol_efficient(std::span<const Trajectory> data, const LearnerConfig& config);
FitReport fit(Method method, std::span<const Trajectory> data, const LearnerConfig& config);

/// Replays a pipeline up to and including `stage` and returns the solver input
/// that stage would see (the rules of later stages are fitted as usual).
StageProblem stage_problem(Method method, std::span<const Trajectory> data,
                           const LearnerConfig& config, std::size_t stage);

}  // namespace amol
