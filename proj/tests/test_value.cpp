#include <doctest.h>

#include <algorithm>
#include <random>

#include "amol/error.hpp"
#include "amol/sim.hpp"
#include "amol/value.hpp"

using namespace amol;

namespace {

Regimen constant_regimen(std::size_t K, int action, std::vector<std::size_t> dims = {}) {
    Regimen r;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t d = dims.empty() ? 0 : history_dim(r.scheme, dims, k);
        r.rules.push_back(LinearRule{static_cast<double>(action), std::vector<double>(d, 0.0)});
    }
    return r;
}

// Rewards independent of the actions: R = 2 + X + e at the single stage.
class FlatScenario final : public Scenario {
public:
    std::size_t num_stages() const override { return 1; }
    std::vector<Trajectory> sample(std::size_t n, std::uint64_t seed, const ActionPolicy* policy,
                                   std::vector<Latent>*) const override {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> z;
        std::vector<Trajectory> out(n);
        for (auto& t : out) {
            const double x = z(rng);
            const double e = z(rng);
            const int coin = z(rng) > 0 ? 1 : -1;
            t.stages.push_back({{x}, 1, 0.0, 0.5, true});
            t.stages[0].action = policy ? (*policy)(t, 0, Latent{}) : coin;
            t.stages[0].reward = 2.0 + x + e;
        }
        return out;
    }
};

}  // namespace

TEST_CASE("fully matched data with unit propensities gives the mean total") {
    std::vector<Trajectory> data(3);
    const double rewards[3][2] = {{1.0, 2.0}, {-1.0, 0.5}, {4.0, 0.0}};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 2; ++k) data[i].stages.push_back({{}, 1, rewards[i][k], 0.5, false});
    const auto v = estimate_value(constant_regimen(2, 1, {0, 0}), data);
    CHECK(v.value == doctest::Approx(6.5 / 3.0));
    CHECK(v.matched_fraction == 1.0);
    CHECK(v.n == 3);
}

TEST_CASE("hand-enumerated inverse-probability value") {
    std::vector<Trajectory> data(2);
    data[0].stages = {{{}, 1, 1.0, 0.5, true}, {{}, 1, 2.0, 0.25, true}};   // matches: 3 / 0.125
    data[1].stages = {{{}, 1, 5.0, 0.5, true}, {{}, -1, 1.0, 0.75, true}};  // deviates at stage 2
    const auto v = estimate_value(constant_regimen(2, 1, {0, 0}), data);
    CHECK(v.value == doctest::Approx((3.0 / 0.125) / 2.0));
    CHECK(v.matched_fraction == 0.5);
    // restricted to stage 2: subject 1 contributes 2 / 0.25
    const auto s = estimate_stage_value(constant_regimen(2, 1, {0, 0}), data, 1);
    CHECK(s.value == doctest::Approx((2.0 / 0.25) / 2.0));
}

TEST_CASE("regimen matching nobody") {
    std::vector<Trajectory> data(4);
    for (auto& t : data) t.stages = {{{}, 1, 3.0, 0.5, true}};
    const auto v = estimate_value(constant_regimen(1, -1, {0}), data);
    CHECK(v.value == 0.0);
    CHECK(v.matched_fraction == 0.0);
}

TEST_CASE("value is invariant to subject order") {
    auto data = gen_setting1(200, 4);
    const Regimen r = constant_regimen(4, 1, {20, 0, 0, 0});
    const double a = estimate_value(r, data).value;
    std::mt19937_64 rng(1);
    std::shuffle(data.begin(), data.end(), rng);
    CHECK(estimate_value(r, data).value == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("value argument checks") {
    std::vector<Trajectory> none;
    CHECK_THROWS_AS(estimate_value(constant_regimen(1, 1, {0}), none), Error);
    std::vector<Trajectory> data(1);
    data[0].stages = {{{}, 1, 1.0, 0.5, true}};
    CHECK_THROWS_AS(estimate_value(constant_regimen(2, 1, {0, 0}), data), Error);
}

TEST_CASE("Monte Carlo value of a constant rule on action-free rewards") {
    const FlatScenario sc;
    const double v = true_value_mc(constant_regimen(1, 1, {1}), sc, 20000, 9);
    CHECK(v == doctest::Approx(2.0).epsilon(0.02));
    CHECK(true_value_mc(constant_regimen(1, -1, {1}), sc, 20000, 9) == v);
    CHECK(true_value_mc(constant_regimen(1, 1, {1}), sc, 20000, 9) == v);
}

TEST_CASE("inverse-probability estimate is unbiased for the rollout value") {
    // Setting 1 has covariate-dependent propensities, which the estimator
    // must undo.
    const Setting1Scenario sc;
    Regimen r = constant_regimen(4, 1, {20, 0, 0, 0});
    std::get<LinearRule>(r.rules[0]).coefficients[0] = 1.0;  // sign(X1 + 1)
    const auto policy = regimen_policy(r);
    const auto rollout = sc.sample(200000, 77, &policy);
    double tsum = 0.0, tsq = 0.0;
    for (const auto& t : rollout) {
        double total = 0.0;
        for (const auto& s : t.stages) total += s.reward;
        tsum += total;
        tsq += total * total;
    }
    const double nt = static_cast<double>(rollout.size());
    const double truth = tsum / nt;
    const double truth_var = (tsq / nt - truth * truth) / nt;
    CHECK(truth == doctest::Approx(true_value_mc(r, sc, 200000, 77)).epsilon(1e-9));
    const int reps = 200;
    double sum = 0.0, sq = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        const double v = estimate_value(r, sc.sample(400, 1000 + rep)).value;
        sum += v;
        sq += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sq / reps - mean * mean) / reps + truth_var);
    CHECK(std::abs(mean - truth) <= 3.0 * se);
}

TEST_CASE("random regimen falls well short of the setting-1 optimum") {
    const Setting1Scenario sc;
    const ActionPolicy coin = [](const Trajectory& t, std::size_t, const Latent&) {
        // deterministic pseudo-coin from the bits of X2
        return std::hash<double>{}(t.stages[0].features[1]) % 2 ? 1 : -1;
    };
    CHECK(policy_value_mc(coin, sc, 20000, 5) < 8.0);
}
