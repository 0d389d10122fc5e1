#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "amol/core_model.hpp"

namespace amol {

/// Unobserved per-subject state a generator may expose to oracle policies.
struct Latent {
    int group = 0;
};

/// Chooses the action at `stage`. `prefix` holds stages 0..stage; the current
/// stage has its features filled in and nothing else.
using ActionPolicy = std::function<int(const Trajectory& prefix, std::size_t stage, const Latent&)>;

/// A sequential data generator. Draws are fixed by the seed alone, so two
/// calls with the same seed and different policies share every noise term.
class Scenario {
public:
    virtual ~Scenario() = default;
    virtual std::size_t num_stages() const = 0;

    /// Subjects under the randomization design, or under `policy` when given
    /// (stored propensities are still the design probabilities).
    virtual std::vector<Trajectory> sample(std::size_t n, std::uint64_t seed,
                                           const ActionPolicy* policy = nullptr,
                                           std::vector<Latent>* latents = nullptr) const = 0;
};

}  // namespace amol
