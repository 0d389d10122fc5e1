#include <doctest.h>

#include <random>

#include "amol/error.hpp"
#include "amol/learners.hpp"
#include "amol/sim.hpp"
#include "oracles.hpp"

using namespace amol;

namespace {

// Single stage, two features, fair coin, R = A * x1 + effect_noise * N(0,1).
std::vector<Trajectory> single_stage(std::size_t n, std::uint64_t seed, double effect, double base = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::bernoulli_distribution coin(0.5);
    std::vector<Trajectory> data(n);
    for (auto& t : data) {
        StageObservation s;
        s.features = {z(rng), z(rng)};
        s.action = coin(rng) ? 1 : -1;
        s.propensity = 0.5;
        s.reward = base + effect * s.action * s.features[0] + 0.5 * z(rng);
        t.stages.push_back(s);
    }
    return data;
}

LearnerConfig small_config() {
    LearnerConfig c;
    c.cost_grid = {0.25, 1.0, 4.0};
    c.lasso_grid_size = 20;
    return c;
}

}  // namespace

TEST_CASE("method names round-trip") {
    for (auto m : {Method::qlearning, Method::olearning, Method::amol_simple, Method::amol_efficient})
        CHECK(parse_method(method_name(m)) == m);
    CHECK_THROWS_AS(parse_method("sarsa"), Error);
    CHECK(default_cost_grid().size() == 8);
    CHECK(default_cost_grid().front() == 1.0 / 32.0);
    CHECK(default_cost_grid().back() == 512.0);
}

TEST_CASE("stage design row layout") {
    CHECK(stage_design_row(std::vector<double>{2.0, -1.0}, -1) == std::vector<double>{2.0, -1.0, -1.0, -2.0, 1.0});
}

TEST_CASE("Q-learning recovers a single-stage sign rule") {
    const auto data = single_stage(1000, 1, 1.0);
    const auto report = fit_qlearning(data, small_config());
    REQUIRE(report.regimen.rules.size() == 1);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    int agree = 0;
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> h{z(rng), z(rng)};
        agree += decide(report.regimen.rules[0], h) == sign_of(h[0]);
    }
    CHECK(agree >= 1900);
}

TEST_CASE("Q-learning without a treatment effect ties toward +1") {
    auto data = single_stage(300, 3, 0.0, 1.0);
    for (auto& t : data) t.stages[0].reward = 1.0;  // no signal at all
    const auto report = fit_qlearning(data, small_config());
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    for (int i = 0; i < 50; ++i) CHECK(decide(report.regimen.rules[0], std::vector<double>{z(rng), z(rng)}) == 1);
}

TEST_CASE("single-stage O-learning and unrecentred AMOL see the same solver input") {
    auto data = single_stage(120, 5, 1.0, 5.0);
    for (auto& t : data) t.stages[0].reward = std::abs(t.stages[0].reward) + 0.1;
    LearnerConfig c = small_config();
    c.recentre = false;
    c.olearning_shift = OLearningShift::only_if_negative;
    const auto o = stage_problem(Method::olearning, data, c, 0);
    const auto a = stage_problem(Method::amol_simple, data, c, 0);
    REQUIRE(o.samples.size() == a.samples.size());
    for (std::size_t i = 0; i < o.samples.size(); ++i) {
        CHECK(o.samples[i].history == a.samples[i].history);
        CHECK(o.samples[i].action == a.samples[i].action);
        CHECK(o.samples[i].weight == a.samples[i].weight);
    }
    const auto ro = fit_olearning(data, c).regimen.rules[0];
    const auto ra = fit_amol_simple(data, c).regimen.rules[0];
    for (const auto& t : data)
        CHECK(decide(ro, t.stages[0].features) == decide(ra, t.stages[0].features));
}

TEST_CASE("single-stage AMOL variants coincide") {
    const auto data = single_stage(150, 6, 1.0);
    const auto c = small_config();
    const auto a = stage_problem(Method::amol_simple, data, c, 0);
    const auto b = stage_problem(Method::amol_efficient, data, c, 0);
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].weight == b.samples[i].weight);
    const auto ra = fit_amol_simple(data, c).regimen.rules[0];
    const auto rb = fit_amol_efficient(data, c).regimen.rules[0];
    for (const auto& t : data)
        CHECK(decision_value(ra, t.stages[0].features) == decision_value(rb, t.stages[0].features));
}

TEST_CASE("O-learning shift puts the smallest weight at zero") {
    auto data = single_stage(80, 7, 1.0);
    const auto p = stage_problem(Method::olearning, data, small_config(), 0);
    double lo = 1e300;
    for (const auto& s : p.samples) lo = std::min(lo, s.weight);
    CHECK(lo == 0.0);
}

TEST_CASE("O-learning stage 1 uses only followers of the stage-2 rule") {
    const auto data = gen_setting1(60, 8);
    LearnerConfig c = small_config();
    // Replay the last stage to get its rule, then count followers by hand.
    const auto report = fit_olearning(data, c);
    std::size_t followers = 0;
    // stage 4 rule fixes who is used at stage 3
    for (const auto& t : data)
        if (decide(report.regimen.rules[3], build_history(t, 3, c.scheme)) == t.stages[3].action) ++followers;
    CHECK(stage_problem(Method::olearning, data, c, 2).samples.size() == followers);
}

TEST_CASE("simple pseudo-outcome by hand") {
    Trajectory t;
    t.stages = {{{0.0}, 1, 1.0, 0.5, true}, {{0.0}, -1, 2.0, 0.25, true}, {{0.0}, 1, -0.5, 0.8, true}};
    const std::vector<int> rec{1, -1, 1};
    const double g = 3.0;
    const double pi = 0.5 * 0.25 * 0.8;
    const auto q = simple_pseudo_outcome(t, 0, rec, g);
    CHECK(q.ipw_term == doctest::Approx(2.5 / pi));
    CHECK(q.augmentation_term == doctest::Approx(-(1.0 - pi) / pi * g));
    CHECK(q.value == doctest::Approx(q.ipw_term + q.augmentation_term));
    // a deviation zeroes the IPW term and leaves +g
    const std::vector<int> off{1, 1, 1};
    const auto d = simple_pseudo_outcome(t, 0, off, g);
    CHECK(d.ipw_term == 0.0);
    CHECK(d.value == doctest::Approx(g));
}

TEST_CASE("compliant subject with unit propensity gives the reward sum") {
    Trajectory t;
    t.stages = {{{1.0}, 1, 1.5, 0.5, false}, {{2.0}, -1, 2.5, 0.5, false}};
    const std::vector<DecisionRule> rules{LinearRule{1.0, {0.0}}, LinearRule{-1.0, std::vector<double>(5, 0.0)}};
    const StageValueFn g = [](std::size_t, std::span<const double>) { return 123.0; };
    for (auto v : {AugmentationVariant::simple, AugmentationVariant::efficient})
        CHECK(augmented_pseudo_outcome(t, 0, rules, HistoryScheme{}, g, v).value == doctest::Approx(4.0));
}

TEST_CASE("efficient pseudo-outcome, two stages, deviation at the last stage") {
    Trajectory t;
    t.stages = {{{0.0}, 1, 1.0, 0.6, true}, {{0.0}, -1, 2.0, 0.3, true}};
    const std::vector<int> rec{1, 1};  // stage 2 deviates; P(recommended) = 0.7
    auto m = [](std::size_t j) { return j == 0 ? 10.0 : 20.0; };
    const auto q = efficient_pseudo_outcome(t, 0, rec, m);
    // j=1: (C=0 - 0.4*1)/0.6 * 10;  j=2: (C=1 - 0.3*1)/(0.6*0.7) * 20
    CHECK(q.ipw_term == 0.0);
    CHECK(q.augmentation_term == doctest::Approx(-0.4 / 0.6 * 10.0 + 0.7 / 0.42 * 20.0));
    // from the last stage only its own term remains
    const std::vector<int> last{1};
    const auto r = efficient_pseudo_outcome(t, 1, last, m);
    CHECK(r.augmentation_term == doctest::Approx((1.0 - 0.3) / 0.7 * 20.0));
    // printed boundary M_{k-1} = 0: C_k = -M_k and the first term vanishes
    const auto lit = efficient_pseudo_outcome(t, 1, last, m, true);
    CHECK(lit.augmentation_term == 0.0);
}

TEST_CASE("efficient equals simple when the regressor is constant across stages") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::normal_distribution<double> z;
    std::bernoulli_distribution coin(0.5);
    for (int rep = 0; rep < 500; ++rep) {
        Trajectory t;
        for (int k = 0; k < 4; ++k)
            t.stages.push_back({{z(rng)}, coin(rng) ? 1 : -1, z(rng), u(rng), rep % 7 != k});
        std::vector<int> rec;
        for (int k = 0; k < 4; ++k) rec.push_back(coin(rng) ? 1 : -1);
        const double c = z(rng) * 5.0;
        for (std::size_t k = 0; k < 4; ++k) {
            const std::span<const int> r(rec.data() + k, 4 - k);
            const auto a = simple_pseudo_outcome(t, k, r, c);
            const auto b = efficient_pseudo_outcome(t, k, r, [&](std::size_t) { return c; });
            CHECK(std::abs(a.value - b.value) <= 1e-10 * (1.0 + std::abs(a.value)));
        }
    }
}

TEST_CASE("pseudo-outcome is unbiased with a wrong imputation model (small sample)") {
    const oracle::TwoStageGenerator gen;
    const HistoryScheme scheme;
    const auto rules = gen.rules(scheme);
    const StageValueFn wrong = [](std::size_t j, std::span<const double> h) { return 5.0 - 3.0 * h[0] + j; };
    std::mt19937_64 rng(10);
    const int n = 20000;
    for (auto v : {AugmentationVariant::simple, AugmentationVariant::efficient}) {
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double q = augmented_pseudo_outcome(gen.draw(rng), 0, rules, scheme, wrong, v).value;
            sum += q;
            sq += q * q;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sq / n - mean * mean) / n);
        CHECK(std::abs(mean - gen.expected_value()) <= 4.0 * se);
    }
}

TEST_CASE("pseudo-outcome argument checks") {
    Trajectory t;
    t.stages = {{{0.0}, 1, 1.0, 0.5, true}};
    CHECK_THROWS_AS(simple_pseudo_outcome(t, 1, std::vector<int>{}, 0.0), Error);
    CHECK_THROWS_AS(simple_pseudo_outcome(t, 0, std::vector<int>{1, 1}, 0.0), Error);
    const std::vector<DecisionRule> rules(2, LinearRule{});
    const StageValueFn g = [](std::size_t, std::span<const double>) { return 0.0; };
    CHECK_THROWS_AS(augmented_pseudo_outcome(t, 0, rules, {}, g, AugmentationVariant::simple), Error);
}

TEST_CASE("cost cross-validation") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    std::vector<WeightedSample> s(80);
    for (auto& x : s) {
        x.history = {z(rng)};
        x.action = z(rng) > 0 ? 1 : -1;
        x.weight = x.action * x.history[0] > 0 ? 1.0 + std::abs(z(rng)) : 0.1;
    }
    SolverConfig base;
    SUBCASE("single grid value") {
        const std::vector<double> grid{0.7};
        CHECK(cross_validate_cost(s, base, grid, 4, 1).cost == 0.7);
    }
    SUBCASE("curve covers the grid in ascending order and picks its maximum") {
        const std::vector<double> grid{8.0, 0.125, 1.0};
        const auto sel = cross_validate_cost(s, base, grid, 4, 1);
        REQUIRE(sel.curve.size() == 3);
        CHECK(sel.curve[0].cost == 0.125);
        CHECK(sel.curve[2].cost == 8.0);
        double best = -1e300;
        for (const auto& p : sel.curve) best = std::max(best, p.score);
        for (const auto& p : sel.curve)
            if (p.cost < sel.cost) CHECK(p.score < best);
        CHECK(cross_validate_cost(s, base, grid, 4, 1).cost == sel.cost);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(cross_validate_cost(s, base, std::vector<double>{}, 4, 1), Error);
        const std::vector<double> grid{1.0, 2.0};
        CHECK_THROWS_AS(cross_validate_cost(std::span(s).first(3), base, grid, 4, 1), Error);
    }
}

TEST_CASE("cost selection on pure noise stays near the constant rule") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    std::vector<WeightedSample> s(200);
    for (auto& x : s) {
        x.history = {z(rng), z(rng)};
        x.action = z(rng) > 0 ? 1 : -1;
        x.weight = z(rng);
    }
    const auto sel = cross_validate_cost(s, SolverConfig{}, default_cost_grid(), 4, 3);
    double best = -1e300;
    for (const auto& p : sel.curve) best = std::max(best, p.score);
    // per-subject held-out score of always choosing +1, and the noise scale of
    // a fold mean
    const double n = static_cast<double>(s.size());
    double constant = 0.0, sq = 0.0;
    for (const auto& x : s) {
        constant += x.action == 1 ? x.weight / n : 0.0;
        sq += x.weight * x.weight / n;
    }
    CHECK(best - constant <= 3.0 * std::sqrt(sq / (n / 4.0)));
}

TEST_CASE("weighted pipelines are deterministic") {
    const auto data = gen_setting2(80, 13);
    LearnerConfig c = small_config();
    c.seed = 5;
    for (auto m : {Method::qlearning, Method::olearning, Method::amol_simple, Method::amol_efficient}) {
        const auto a = fit(m, data, c);
        const auto b = fit(m, data, c);
        REQUIRE(a.regimen.rules.size() == 4);
        CHECK(a.stages.size() == 4);
        for (std::size_t k = 0; k < 4; ++k)
            for (const auto& t : data) {
                const auto h = build_history(t, k, c.scheme);
                CHECK(decision_value(a.regimen.rules[k], h.values) == decision_value(b.regimen.rules[k], h.values));
            }
    }
}

TEST_CASE("AMOL keeps negative-weight subjects") {
    const auto data = gen_setting2(100, 14);
    const auto p = stage_problem(Method::amol_simple, data, small_config(), 3);
    CHECK(p.samples.size() == data.size());
    std::size_t negative = 0;
    for (const auto& s : p.samples) negative += s.weight < 0.0;
    CHECK(negative > 0);
    const auto report = fit_amol_simple(data, small_config());
    CHECK(report.stages[3].negative_weight_fraction ==
          doctest::Approx(static_cast<double>(negative) / static_cast<double>(data.size())));
}

TEST_CASE("ineligible stages are skipped by the weighted learners") {
    auto data = single_stage(100, 15, 1.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        StageObservation s;
        s.features = {1.0};
        s.action = 1;
        s.reward = data[i].stages[0].action * data[i].stages[0].features[0];
        s.propensity = 0.5;
        s.eligible = i % 3 != 0;
        if (s.eligible) s.action = i % 2 ? 1 : -1;
        data[i].stages.push_back(s);
    }
    const auto p = stage_problem(Method::amol_simple, data, small_config(), 1);
    CHECK(p.samples.size() == data.size() - (data.size() + 2) / 3);
    CHECK_NOTHROW(fit_amol_efficient(data, small_config()));
    CHECK_NOTHROW(fit_olearning(data, small_config()));
}
