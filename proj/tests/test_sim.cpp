#include <doctest.h>

#include <cmath>
#include <sstream>

#include "amol/error.hpp"
#include "amol/io.hpp"
#include "amol/sim.hpp"
#include "amol/value.hpp"

using namespace amol;

namespace {

const std::string fixtures = AMOL_FIXTURE_DIR;

}  // namespace

TEST_CASE("setting-2 optimal actions match the committed decode table") {
    const auto table = read_json_file(fixtures + "/setting2_decode.json");
    for (int l = 1; l <= 10; ++l)
        for (int j = 1; j <= 4; ++j)
            CHECK(setting2_optimal_action(l, j) == table.at(std::to_string(l)).at(j - 1).get<int>());
    CHECK(setting2_optimal_action(1, 1) == 1);
    CHECK(setting2_optimal_action(1, 2) == -1);
    CHECK_THROWS_AS(setting2_optimal_action(0, 1), Error);
    CHECK_THROWS_AS(setting2_optimal_action(1, 5), Error);
}

TEST_CASE("generators are deterministic in the seed") {
    for (auto gen : {gen_setting1, gen_setting2}) {
        std::stringstream a, b, c;
        write_csv(a, gen(30, 5));
        write_csv(b, gen(30, 5));
        write_csv(c, gen(30, 6));
        CHECK(a.str() == b.str());
        CHECK(a.str() != c.str());
    }
}

TEST_CASE("setting-1 shape and noiseless rewards") {
    const auto data = gen_setting1(10, 1);
    REQUIRE(data.size() == 10);
    CHECK(data[0].num_stages() == 4);
    CHECK(data[0].stages[0].features.size() == 20);
    CHECK(data[0].stages[1].features.empty());
    const Setting1Scenario quiet(1.0, 0.0);
    const ActionPolicy plus = [](const Trajectory&, std::size_t, const Latent&) { return 1; };
    for (const auto& t : quiet.sample(50, 2, &plus)) {
        const auto& x = t.stages[0].features;
        const double r1 = x[0];
        const double r2 = r1 + x[1] * x[1] + x[2] * x[2] - 0.8;
        const double r3 = (r2 + x[3]) + x[4] * x[4] + x[5];
        CHECK(t.stages[0].reward == doctest::Approx(r1));
        CHECK(t.stages[1].reward == doctest::Approx(r2));
        CHECK(t.stages[2].reward == doctest::Approx(r3));
        CHECK(t.stages[3].reward == doctest::Approx(r3 - 0.5));
    }
    // the printed factor-2 variant
    const Setting1Scenario doubled(2.0, 0.0);
    for (const auto& t : doubled.sample(20, 2, &plus)) {
        const auto& x = t.stages[0].features;
        CHECK(t.stages[2].reward ==
              doctest::Approx(2.0 * (t.stages[1].reward + x[3]) + x[4] * x[4] + x[5]));
    }
}

TEST_CASE("setting-1 design propensities") {
    const std::vector<double> x{1.0, 0.0, 2.0, -1.0};
    CHECK(Setting1Scenario::prob_treat(0, x, 0.0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))));
    CHECK(Setting1Scenario::prob_treat(1, x, 3.0) == doctest::Approx(1.0 / (1.0 + std::exp(0.3))));
    CHECK(Setting1Scenario::prob_treat(2, x, 0.0) == doctest::Approx(1.0 / (1.0 + std::exp(0.4))));
    CHECK(Setting1Scenario::prob_treat(3, x, 0.0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.2))));
    for (const auto& t : gen_setting1(200, 3)) {
        const auto& x1 = t.stages[0].features;
        const double p = Setting1Scenario::prob_treat(0, x1, 0.0);
        CHECK(t.stages[0].propensity == doctest::Approx(t.stages[0].action == 1 ? p : 1.0 - p));
    }
}

TEST_CASE("setting-1 feature moments") {
    const auto data = gen_setting1(100000, 4);
    double s12 = 0.0, s1 = 0.0, s2 = 0.0, s11 = 0.0, s22 = 0.0, s1_15 = 0.0;
    for (const auto& t : data) {
        const auto& x = t.stages[0].features;
        s1 += x[0];
        s2 += x[1];
        s11 += x[0] * x[0];
        s22 += x[1] * x[1];
        s12 += x[0] * x[1];
        s1_15 += x[0] * x[14];
    }
    const double n = 100000.0;
    const double cov = s12 / n - (s1 / n) * (s2 / n);
    CHECK(std::abs(cov - 0.2) <= 0.01);
    CHECK(std::abs(s11 / n - 1.0) <= 0.02);
    CHECK(std::abs(s22 / n - 1.0) <= 0.02);
    CHECK(std::abs(s1_15 / n) <= 0.02);
    // E[R1] under the design: E[X1 (2 p(X1) - 1)] > 0 since treatment favours X1 > 0
    double r1 = 0.0;
    for (const auto& t : data) r1 += t.stages[0].reward / n;
    CHECK(r1 > 0.0);
}

TEST_CASE("setting-2 shape, propensities and noiseless reward") {
    const auto data = gen_setting2(50, 1);
    CHECK(data[0].stages[0].features.size() == 30);
    for (const auto& t : data)
        for (const auto& s : t.stages) CHECK(s.propensity == 0.5);
    for (const auto& t : data)
        for (int k = 0; k < 3; ++k) CHECK(t.stages[static_cast<std::size_t>(k)].reward == 0.0);

    const Setting2Scenario quiet(7, GroupMeans::per_feature, 0.0);
    const auto oracle = setting2_oracle_policy();
    for (const auto& t : quiet.sample(30, 3, &oracle)) CHECK(t.stages[3].reward == 4.0);
}

TEST_CASE("setting-2 group means") {
    const Setting2Scenario shared(3, GroupMeans::shared);
    for (const auto& row : shared.group_means())
        for (double m : row) CHECK(m == row[0]);
    const Setting2Scenario per(3, GroupMeans::per_feature);
    CHECK(per.group_means()[0][0] != per.group_means()[0][1]);
    // features X1..X10 carry the mean of the subject's group
    Setting2Scenario::MeanTable table{};
    for (int l = 0; l < 10; ++l) table[static_cast<std::size_t>(l)].fill(100.0 * (l + 1));
    const Setting2Scenario fixed(table);
    std::vector<Latent> latents;
    const auto data = fixed.sample(200, 4, nullptr, &latents);
    double dev = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double mu = 100.0 * latents[i].group;
        dev = std::max(dev, std::abs(data[i].stages[0].features[0] - mu));
        CHECK(std::abs(data[i].stages[0].features[20]) < 10.0);
    }
    CHECK(dev < 10.0);
}

TEST_CASE("counterfactual rollouts share noise with the design draw") {
    const Setting2Scenario sc(2);
    std::vector<Latent> a, b;
    const auto plus = [](const Trajectory&, std::size_t, const Latent&) { return 1; };
    const ActionPolicy policy = plus;
    const auto design = sc.sample(20, 9, nullptr, &a);
    const auto forced = sc.sample(20, 9, &policy, &b);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(a[i].group == b[i].group);
        CHECK(design[i].stages[0].features == forced[i].stages[0].features);
    }
}

TEST_CASE("oracle regimens dominate simple alternatives") {
    const Setting1Scenario s1;
    const double dp = policy_value_mc(s1.oracle_policy(), s1, 5000, 1);
    const double greedy = policy_value_mc(setting1_greedy_policy(), s1, 5000, 1);
    CHECK(dp >= greedy - 0.05);
    CHECK(dp > 9.5);
    const Setting2Scenario s2(1);
    CHECK(policy_value_mc(setting2_oracle_policy(), s2, 5000, 1) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("benchmark report structure and determinism") {
    ScenarioSpec spec;
    spec.setting = Setting::two;
    spec.n_train = 60;
    spec.n_test = 500;
    spec.replicates = 2;
    spec.seed = 3;
    LearnerConfig c;
    c.cost_grid = {0.5, 2.0};
    c.lasso_grid_size = 10;
    const std::vector<Method> methods{Method::qlearning, Method::amol_simple};
    const auto a = run_benchmark(spec, methods, c, 1);
    const auto b = run_benchmark(spec, methods, c, 2);
    REQUIRE(a.methods.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
        CHECK(a.methods[m].values.size() == 2);
        CHECK(a.methods[m].failures == 0);
        CHECK(a.methods[m].values == b.methods[m].values);
    }
    CHECK(benchmark_summary_json(a).dump() == benchmark_summary_json(b).dump());
    std::stringstream csv;
    write_benchmark_csv(csv, a);
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 1 + 2 * 2);
    spec.replicates = 1;
    const auto one = run_benchmark(spec, std::vector<Method>{Method::qlearning}, c, 1);
    CHECK(one.methods[0].values.size() == 1);
    CHECK(one.methods[0].mean == one.methods[0].median);
    spec.replicates = 0;
    CHECK_THROWS_AS(run_benchmark(spec, methods, c), Error);
}
