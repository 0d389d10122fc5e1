#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "amol/error.hpp"
#include "amol/io.hpp"

using namespace amol;

namespace {

const std::string fixtures = AMOL_FIXTURE_DIR;

DatasetSchema k2_schema() { return read_schema(fixtures + "/k2_schema.json"); }

ErrorCode parse_error(const std::string& csv, const DatasetSchema& schema) {
    std::istringstream in(csv);
    try {
        parse_csv(in, schema);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a parse failure");
    return ErrorCode::invalid_argument;
}

std::filesystem::path scratch(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("amol_test_" + name);
}

}  // namespace

TEST_CASE("fixture rows land in the right fields") {
    const auto data = load_csv(fixtures + "/k2_two_rows.csv", k2_schema());
    REQUIRE(data.size() == 2);
    const auto& a = data[0];
    CHECK(a.stages[0].features == std::vector<double>{34, 2.5});
    CHECK(a.stages[0].action == 1);
    CHECK(a.stages[0].reward == 0.75);
    CHECK(a.stages[0].propensity == 0.5);
    CHECK(a.stages[1].features == std::vector<double>{-1.5});
    CHECK(a.stages[1].action == -1);
    CHECK(a.stages[1].reward == 2.0);
    CHECK(a.stages[1].propensity == 0.25);
    CHECK(a.stages[1].eligible);
    const auto& b = data[1];
    CHECK(b.stages[0].features == std::vector<double>{51, -0.5});
    CHECK(b.stages[0].action == -1);
    CHECK_FALSE(b.stages[1].eligible);
    CHECK(b.stages[1].reward == 0.0);
    CHECK(b.stages[1].effective_propensity() == 1.0);
}

TEST_CASE("CSV validation errors") {
    const auto schema = k2_schema();
    const std::string header = "id,age,score,trt1,y1,mid,trt2,y2,p2,rand2\n";
    CHECK(parse_error(header + "1,34,2.5,0,0.75,-1.5,-1,2,0.25,1\n", schema) == ErrorCode::parse);
    CHECK(parse_error(header + "1,34,2.5,1,0.75,-1.5,-1,2,1.5,1\n", schema) == ErrorCode::parse);
    CHECK(parse_error(header + "1,34,2.5,1,,-1.5,-1,2,0.25,1\n", schema) == ErrorCode::parse);
    CHECK(parse_error(header + "1,34,2.5,1,0.75\n", schema) == ErrorCode::parse);
    CHECK(parse_error(header + "1,34,abc,1,0.75,-1.5,-1,2,0.25,1\n", schema) == ErrorCode::parse);
    CHECK(parse_error("id,age\n1,2\n", schema) == ErrorCode::schema);
    CHECK(parse_error(header, schema) == ErrorCode::parse);
    try {
        std::istringstream in(header + "1,34,2.5,1,0.75,-1.5,-1,2,0.25,1\n2,34,2.5,0,0.75,-1.5,-1,2,0.25,1\n");
        parse_csv(in, schema);
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("trt1") != std::string::npos);
    }
}

TEST_CASE("RFC 4180 quoting") {
    CHECK(split_csv_record("a,\"b,c\",\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "d\"e"});
    CHECK(split_csv_record("x,,") == std::vector<std::string>{"x", "", ""});
    CHECK_THROWS_AS(split_csv_record("\"open"), Error);
}

TEST_CASE("schema validation") {
    nlohmann::json j = {{"format", "amol-schema"}, {"version", 1},
                        {"stages", {{{"features", {"x"}}, {"action", "a"}, {"reward", "r"}}}}};
    CHECK_THROWS_AS(schema_from_json(j), Error);  // no propensity
    j["stages"][0]["propensity_constant"] = 1.0;
    CHECK_THROWS_AS(schema_from_json(j), Error);
    j["stages"][0]["propensity_constant"] = 0.5;
    CHECK(schema_from_json(j).num_stages() == 1);
    j["version"] = 9;
    CHECK_THROWS_AS(schema_from_json(j), Error);
}

TEST_CASE("CSV round trip is exact") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    std::vector<Trajectory> data(50);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            StageObservation s;
            s.features = {z(rng) * 1e3, z(rng) * 1e-7, std::nextafter(1.0, 2.0)};
            s.action = z(rng) > 0 ? 1 : -1;
            s.reward = z(rng) / 3.0;
            s.propensity = 0.1 + 0.8 * std::abs(std::tanh(z(rng)));
            s.eligible = !(k == 2 && i % 4 == 0);
            if (!s.eligible) s.propensity = 1.0;
            data[i].stages.push_back(s);
        }
    }
    std::stringstream buf;
    write_csv(buf, data);
    const auto back = parse_csv(buf, default_schema({3, 3, 3}));
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        for (int k = 0; k < 3; ++k) {
            const auto& a = data[i].stages[k];
            const auto& b = back[i].stages[k];
            CHECK(a.features == b.features);
            CHECK(a.action == b.action);
            CHECK(a.reward == b.reward);
            CHECK(a.propensity == b.propensity);
            CHECK(a.eligible == b.eligible);
        }
}

TEST_CASE("regimen JSON round trip keeps every decision") {
    Regimen r;
    r.scheme.action_reward_interactions = true;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    LinearRule lin{z(rng), {z(rng), z(rng), z(rng)}};
    KernelRule ker;
    ker.kernel = KernelSpec::gaussian(1.3);
    for (int i = 0; i < 5; ++i) {
        ker.support.push_back({z(rng), z(rng), z(rng)});
        ker.multipliers.push_back(z(rng));
    }
    ker.bias = z(rng);
    ker.input_scale = {1.0, 2.0, 0.5};
    r.rules = {lin, ker};
    const auto text = regimen_to_json(r).dump();
    const Regimen back = regimen_from_json(nlohmann::json::parse(text));
    CHECK(back.scheme == r.scheme);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> h{z(rng) * 3, z(rng) * 3, z(rng) * 3};
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(decide(back.rules[k], h) == decide(r.rules[k], h));
            CHECK(decision_value(back.rules[k], h) == decision_value(r.rules[k], h));
        }
    }
    CHECK_THROWS_AS(regimen_from_json(nlohmann::json{{"format", "amol-regimen"}, {"version", 2}}), Error);
}

TEST_CASE("config JSON round trip") {
    LearnerConfig c;
    c.kernel.kind = KernelSpec::Kind::gaussian;
    c.kernel.bandwidth = 0.8;
    c.cost_grid = {0.5, 2.0};
    c.cost_folds = 3;
    c.recentre = false;
    c.literal_boundary = true;
    c.penalize_treatment = false;
    c.olearning_shift = OLearningShift::only_if_negative;
    c.seed = 99;
    c.scheme.cumulative_interactions = true;
    const auto j = config_to_json(c);
    const auto back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(back.kernel.bandwidth.value() == 0.8);
    CHECK(config_from_json(nlohmann::json::object()).cost_grid == default_cost_grid());
}

TEST_CASE("file helpers") {
    const auto path = scratch("missing.json");
    std::filesystem::remove(path);
    try {
        read_json_file(path.string());
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
    }
    write_text_file(path.string(), "{not json");
    try {
        read_json_file(path.string());
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
    }
    std::filesystem::remove(path);
}
