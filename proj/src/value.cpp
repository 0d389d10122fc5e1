#include "amol/value.hpp"

#include "amol/error.hpp"

namespace amol {

ValueEstimate estimate_stage_value(const Regimen& regimen, std::span<const Trajectory> data,
                                   std::size_t from_stage) {
    require(!data.empty(), ErrorCode::invalid_argument, "value of an empty dataset");
    const std::size_t K = regimen.num_stages();
    ValueEstimate est;
    est.n = data.size();
    std::size_t matched = 0;
    double sum = 0.0;
    for (const auto& t : data) {
        if (t.num_stages() != K)
            fail(ErrorCode::dimension_mismatch, "regimen and trajectory stage counts differ");
        require(from_stage < K, ErrorCode::invalid_argument, "stage out of range");
        bool all = true;
        double prob = 1.0;
        double total = 0.0;
        for (std::size_t k = from_stage; k < K; ++k) {
            const auto& s = t.stages[k];
            total += s.reward;
            if (!s.eligible) continue;
            if (!(s.propensity > 0.0)) fail(ErrorCode::numerical, "zero propensity encountered");
            prob *= s.propensity;
            if (all && decide(regimen.rules[k], build_history(t, k, regimen.scheme)) != s.action)
                all = false;
        }
        if (all) {
            ++matched;
            sum += total / prob;
        }
    }
    est.value = sum / static_cast<double>(data.size());
    est.matched_fraction = static_cast<double>(matched) / static_cast<double>(data.size());
    return est;
}

ValueEstimate estimate_value(const Regimen& regimen, std::span<const Trajectory> data) {
    return estimate_stage_value(regimen, data, 0);
}

ActionPolicy regimen_policy(const Regimen& regimen) {
    return [&regimen](const Trajectory& prefix, std::size_t stage, const Latent&) {
        return decide(regimen.rules.at(stage), build_history(prefix, stage, regimen.scheme));
    };
}

double policy_value_mc(const ActionPolicy& policy, const Scenario& scenario, std::size_t n_test,
                       std::uint64_t seed) {
    require(n_test >= 1, ErrorCode::invalid_argument, "n_test must be positive");
    const auto data = scenario.sample(n_test, seed, &policy);
    double sum = 0.0;
    for (const auto& t : data)
        for (const auto& s : t.stages) sum += s.reward;
    return sum / static_cast<double>(n_test);
}

double true_value_mc(const Regimen& regimen, const Scenario& scenario, std::size_t n_test,
                     std::uint64_t seed) {
    require(regimen.num_stages() == scenario.num_stages(), ErrorCode::dimension_mismatch,
            "regimen and scenario stage counts differ");
    return policy_value_mc(regimen_policy(regimen), scenario, n_test, seed);
}

}  // namespace amol
