#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amol/core_model.hpp"
#include "amol/kernel.hpp"

namespace amol {

/// One row of the outcome-weighted classification problem. The weight is the
/// full signed multiplier (any inverse-propensity factor already folded in);
/// the solver trains on label action * sign(weight) with box cap cost * |weight|.
struct WeightedSample {
    std::vector<double> history;
    int action = 1;
    double weight = 0.0;
};

struct SolverConfig {
    double cost = 1.0;
    KernelSpec kernel;
    double kkt_tolerance = 1e-3;
    std::size_t max_passes = 100000;  // pair updates
};

/// Dual variables aligned with the input samples (zero for dropped samples).
struct DualSolution {
    std::vector<double> alphas;
    double bias = 0.0;
    double objective = 0.0;  // sum(alpha) - 1/2 alpha' Q alpha
};

enum class SolverStatus { converged, single_class, no_convergence };

struct WsvmFit {
    DecisionRule rule;
    DualSolution dual;
    SolverStatus status = SolverStatus::converged;
    std::size_t iterations = 0;
    std::size_t support_vectors = 0;
    std::vector<double> objective_trace;  // filled when requested
};

/// Trains sign(f), f(h) = sum_i alpha_i l_i K(h_i, h) + b with l_i = a_i sign(w_i),
/// maximizing the dual over 0 <= alpha_i <= cost |w_i|, sum alpha_i l_i = 0, by
/// two-variable coordinate ascent (second-order pair selection, with shrinking);
/// it stops once the maximal violating pair gap is below kkt_tolerance. Zero-weight
/// samples are dropped. Throws degenerate when every weight is zero.
/// A non-empty warm_start (aligned with samples) seeds the multipliers; it
/// must satisfy the equality constraint and lie inside the box.
WsvmFit fit_weighted_svm(std::span<const WeightedSample> samples, const SolverConfig& config,
                         bool trace_objective = false, std::span<const double> warm_start = {});

/// Fits along an ascending cost grid, warm-starting each solve from the
/// previous one. Once a converged solution has no multiplier at its cap it is
/// optimal for every larger cost and is reused.
std::vector<WsvmFit> fit_weighted_svm_path(std::span<const WeightedSample> samples,
                                           const SolverConfig& base, std::span<const double> costs);

/// Largest KKT violation of a dual solution (bias included); zero-weight
/// samples are ignored.
double check_kkt(std::span<const WeightedSample> samples, const SolverConfig& config,
                 const DualSolution& solution);

/// sum(alpha) - 1/2 alpha' Q alpha for arbitrary alphas.
double dual_objective(std::span<const WeightedSample> samples, const KernelSpec& kernel,
                      std::span<const double> alphas);

}  // namespace amol
