#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "amol/kernel.hpp"

namespace amol {

// Stage indices are 0-based throughout the C++ API: stage k here is stage k+1
// in the usual 1-based notation for K-stage trials.

struct StageObservation {
    std::vector<double> features;
    int action = 1;           // -1 or +1
    double reward = 0.0;
    double propensity = 0.5;  // probability of the action actually received
    bool eligible = true;     // false: not randomized at this stage

    // Ineligible stages behave as if the received action was assigned with
    // probability one.
    double effective_propensity() const { return eligible ? propensity : 1.0; }
};

struct Trajectory {
    std::vector<StageObservation> stages;

    std::size_t num_stages() const { return stages.size(); }
};

/// Controls which blocks enter the history vector at each stage. Layout for
/// stage k (blocks in this order, each block stage-ordered):
///   features of stages 0..k
///   actions of stages 0..k-1                     (if actions)
///   rewards of stages 0..k-1                     (if rewards)
///   action_j * features_j for j = 0..k-1         (if action_feature_interactions)
///   action_j * reward_j for j = 0..k-1           (if action_reward_interactions)
struct HistoryScheme {
    bool actions = true;
    bool rewards = true;
    bool action_feature_interactions = true;
    bool action_reward_interactions = false;
    // A_j multiplies every feature observed up to stage j (X_1..X_j) rather
    // than only the stage-j block.
    bool cumulative_interactions = false;

    bool operator==(const HistoryScheme&) const = default;
};

struct HistoryVector {
    std::size_t stage = 0;
    std::vector<double> values;
};

struct LinearRule {
    double bias = 0.0;
    std::vector<double> coefficients;
};

struct KernelRule {
    std::vector<std::vector<double>> support;
    std::vector<double> multipliers;  // alpha_i * label_i
    double bias = 0.0;
    KernelSpec kernel;
    std::vector<double> input_scale;  // h is divided by this before the kernel; empty = identity
};

using DecisionRule = std::variant<LinearRule, KernelRule>;

struct Regimen {
    HistoryScheme scheme;
    std::vector<DecisionRule> rules;

    std::size_t num_stages() const { return rules.size(); }
};

/// Per-stage feature dimensions of a dataset; validates every trajectory and
/// checks they agree on K and on each stage's dimension.
std::vector<std::size_t> dataset_feature_dims(std::span<const Trajectory> data);

void validate_trajectory(const Trajectory& traj);

std::size_t history_dim(const HistoryScheme& scheme, std::span<const std::size_t> feature_dims,
                        std::size_t stage);

HistoryVector build_history(const Trajectory& traj, std::size_t stage,
                            const HistoryScheme& scheme);

/// Histories of every subject at one stage.
std::vector<std::vector<double>> stage_histories(std::span<const Trajectory> data,
                                                 std::size_t stage, const HistoryScheme& scheme);

double decision_value(const DecisionRule& rule, std::span<const double> h);

/// sign(f(h)) with sign(0) = +1.
int decide(const DecisionRule& rule, std::span<const double> h);
inline int decide(const DecisionRule& rule, const HistoryVector& h) { return decide(rule, h.values); }

inline int sign_of(double v) { return v >= 0.0 ? 1 : -1; }

/// Input dimension a rule expects, or 0 when it accepts any (empty linear rule).
std::size_t rule_input_dim(const DecisionRule& rule);

}  // namespace amol
