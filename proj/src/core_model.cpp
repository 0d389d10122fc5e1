#include "amol/core_model.hpp"

#include <cmath>
#include <string>

#include "amol/error.hpp"

namespace amol {

void validate_trajectory(const Trajectory& traj) {
    require(!traj.stages.empty(), ErrorCode::invalid_argument, "trajectory has no stages");
    for (std::size_t k = 0; k < traj.stages.size(); ++k) {
        const auto& s = traj.stages[k];
        const std::string where = " at stage " + std::to_string(k + 1);
        if (s.action != 1 && s.action != -1)
            fail(ErrorCode::invalid_argument, "action must be -1 or +1" + where);
        if (s.eligible && !(s.propensity > 0.0 && s.propensity < 1.0))
            fail(ErrorCode::invalid_argument, "propensity must lie in (0,1)" + where);
        if (!std::isfinite(s.reward)) fail(ErrorCode::numerical, "non-finite reward" + where);
        for (double x : s.features)
            if (!std::isfinite(x)) fail(ErrorCode::numerical, "non-finite feature" + where);
    }
}

std::vector<std::size_t> dataset_feature_dims(std::span<const Trajectory> data) {
    require(!data.empty(), ErrorCode::invalid_argument, "empty dataset");
    std::vector<std::size_t> dims;
    for (const auto& s : data.front().stages) dims.push_back(s.features.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        validate_trajectory(data[i]);
        if (data[i].stages.size() != dims.size())
            fail(ErrorCode::dimension_mismatch,
                 "subject " + std::to_string(i) + " has a different number of stages");
        for (std::size_t k = 0; k < dims.size(); ++k)
            if (data[i].stages[k].features.size() != dims[k])
                fail(ErrorCode::dimension_mismatch, "subject " + std::to_string(i) +
                                                        " feature dimension differs at stage " +
                                                        std::to_string(k + 1));
    }
    return dims;
}

std::size_t history_dim(const HistoryScheme& scheme, std::span<const std::size_t> feature_dims,
                        std::size_t stage) {
    require(stage < feature_dims.size(), ErrorCode::invalid_argument, "stage out of range");
    std::size_t n = 0;
    std::size_t prior_features = 0;
    std::size_t seen = 0;
    for (std::size_t j = 0; j <= stage; ++j) n += feature_dims[j];
    for (std::size_t j = 0; j < stage; ++j) {
        seen += feature_dims[j];
        prior_features += scheme.cumulative_interactions ? seen : feature_dims[j];
    }
    if (scheme.actions) n += stage;
    if (scheme.rewards) n += stage;
    if (scheme.action_feature_interactions) n += prior_features;
    if (scheme.action_reward_interactions) n += stage;
    return n;
}

HistoryVector build_history(const Trajectory& traj, std::size_t stage,
                            const HistoryScheme& scheme) {
    if (stage >= traj.stages.size())
        fail(ErrorCode::invalid_argument, "stage " + std::to_string(stage + 1) +
                                              " out of range for a " +
                                              std::to_string(traj.stages.size()) +
                                              "-stage trajectory");
    HistoryVector h;
    h.stage = stage;
    auto& v = h.values;
    for (std::size_t j = 0; j <= stage; ++j)
        v.insert(v.end(), traj.stages[j].features.begin(), traj.stages[j].features.end());
    if (scheme.actions)
        for (std::size_t j = 0; j < stage; ++j) v.push_back(traj.stages[j].action);
    if (scheme.rewards)
        for (std::size_t j = 0; j < stage; ++j) v.push_back(traj.stages[j].reward);
    if (scheme.action_feature_interactions)
        for (std::size_t j = 0; j < stage; ++j)
            for (std::size_t s = scheme.cumulative_interactions ? 0 : j; s <= j; ++s)
                for (double x : traj.stages[s].features) v.push_back(traj.stages[j].action * x);
    if (scheme.action_reward_interactions)
        for (std::size_t j = 0; j < stage; ++j)
            v.push_back(traj.stages[j].action * traj.stages[j].reward);
    return h;
}

std::vector<std::vector<double>> stage_histories(std::span<const Trajectory> data,
                                                 std::size_t stage, const HistoryScheme& scheme) {
    std::vector<std::vector<double>> out;
    out.reserve(data.size());
    for (const auto& t : data) out.push_back(build_history(t, stage, scheme).values);
    return out;
}

namespace {

struct DecisionValue {
    std::span<const double> h;

    double operator()(const LinearRule& r) const {
        if (r.coefficients.size() != h.size())
            fail(ErrorCode::dimension_mismatch,
                 "linear rule expects " + std::to_string(r.coefficients.size()) +
                     " inputs, history has " + std::to_string(h.size()));
        double f = r.bias;
        for (std::size_t i = 0; i < h.size(); ++i) f += r.coefficients[i] * h[i];
        return f;
    }

    double operator()(const KernelRule& r) const {
        require(r.support.size() == r.multipliers.size(), ErrorCode::dimension_mismatch,
                "kernel rule support and multiplier counts differ");
        std::vector<double> scaled;
        std::span<const double> x = h;
        if (!r.input_scale.empty()) {
            require(r.input_scale.size() == h.size(), ErrorCode::dimension_mismatch,
                    "kernel rule input scale does not match history length");
            scaled.resize(h.size());
            for (std::size_t d = 0; d < h.size(); ++d) scaled[d] = h[d] / r.input_scale[d];
            x = scaled;
        }
        double f = r.bias;
        for (std::size_t i = 0; i < r.support.size(); ++i)
            f += r.multipliers[i] * kernel_eval(r.kernel, r.support[i], x);
        return f;
    }
};

}  // namespace

double decision_value(const DecisionRule& rule, std::span<const double> h) {
    return std::visit(DecisionValue{h}, rule);
}

int decide(const DecisionRule& rule, std::span<const double> h) {
    return sign_of(decision_value(rule, h));
}

std::size_t rule_input_dim(const DecisionRule& rule) {
    if (const auto* lin = std::get_if<LinearRule>(&rule)) return lin->coefficients.size();
    const auto& ker = std::get<KernelRule>(rule);
    return ker.support.empty() ? 0 : ker.support.front().size();
}

}  // namespace amol
