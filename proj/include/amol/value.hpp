#pragma once

#include <cstdint>
#include <span>

#include "amol/core_model.hpp"
#include "amol/scenario.hpp"

namespace amol {

struct ValueEstimate {
    double value = 0.0;
    double matched_fraction = 0.0;  // subjects whose every eligible action matches the regimen
    std::size_t n = 0;
};

/// Inverse-probability-weighted value: mean of 1(all matched) * sum(R) / prod(pi).
ValueEstimate estimate_value(const Regimen& regimen, std::span<const Trajectory> data);

/// Same estimator restricted to stages >= from_stage.
ValueEstimate estimate_stage_value(const Regimen& regimen, std::span<const Trajectory> data,
                                   std::size_t from_stage);

ActionPolicy regimen_policy(const Regimen& regimen);

/// Mean total reward of n_test subjects rolled out under `policy`.
double policy_value_mc(const ActionPolicy& policy, const Scenario& scenario, std::size_t n_test,
                       std::uint64_t seed);

double true_value_mc(const Regimen& regimen, const Scenario& scenario, std::size_t n_test,
                     std::uint64_t seed);

}  // namespace amol
