#include "amol/amol.h"

#include <cstring>
#include <fstream>
#include <new>
#include <optional>
#include <string>

#include "amol/error.hpp"
#include "amol/io.hpp"
#include "amol/learners.hpp"
#include "amol/sim.hpp"
#include "amol/value.hpp"

struct amol_dataset {
    std::vector<amol::Trajectory> data;
};

struct amol_model {
    amol::Regimen regimen;
    nlohmann::json document;
};

struct amol_benchmark {
    amol::BenchmarkReport report;
};

namespace {

thread_local std::string last_error;

amol_status to_status(amol::ErrorCode c) {
    switch (c) {
        case amol::ErrorCode::invalid_argument: return AMOL_ERR_INVALID_ARGUMENT;
        case amol::ErrorCode::dimension_mismatch: return AMOL_ERR_DIMENSION;
        case amol::ErrorCode::io: return AMOL_ERR_IO;
        case amol::ErrorCode::parse: return AMOL_ERR_PARSE;
        case amol::ErrorCode::schema: return AMOL_ERR_SCHEMA;
        case amol::ErrorCode::degenerate: return AMOL_ERR_DEGENERATE;
        case amol::ErrorCode::numerical: return AMOL_ERR_NUMERICAL;
    }
    return AMOL_ERR_INTERNAL;
}

template <class F>
amol_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return AMOL_OK;
    } catch (const amol::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const nlohmann::json::exception& e) {
        last_error = e.what();
        return AMOL_ERR_PARSE;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return AMOL_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return AMOL_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) amol::fail(amol::ErrorCode::invalid_argument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

nlohmann::json parse_optional(const char* text) {
    if (!text || !*text) return nullptr;
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        amol::fail(amol::ErrorCode::invalid_argument, std::string("configuration is not valid JSON: ") + e.what());
    }
}

amol::Setting to_setting(int setting) {
    if (setting == 1) return amol::Setting::one;
    if (setting == 2) return amol::Setting::two;
    amol::fail(amol::ErrorCode::invalid_argument, "setting must be 1 or 2");
}

}  // namespace

extern "C" {

const char* amol_version(void) { return "1.0.0"; }

const char* amol_last_error(void) { return last_error.c_str(); }

const char* amol_status_name(amol_status status) {
    switch (status) {
        case AMOL_OK: return "ok";
        case AMOL_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case AMOL_ERR_DIMENSION: return "dimension_mismatch";
        case AMOL_ERR_IO: return "io";
        case AMOL_ERR_PARSE: return "parse";
        case AMOL_ERR_SCHEMA: return "schema";
        case AMOL_ERR_DEGENERATE: return "degenerate";
        case AMOL_ERR_NUMERICAL: return "numerical";
        case AMOL_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

void amol_string_free(char* s) { std::free(s); }

amol_status amol_dataset_load_csv(const char* csv_path, const char* schema_path, amol_dataset** out) {
    return guarded([&] {
        need(csv_path, "csv_path");
        need(schema_path, "schema_path");
        need(out, "out");
        auto ds = std::make_unique<amol_dataset>();
        ds->data = amol::load_csv(csv_path, amol::read_schema(schema_path));
        amol::dataset_feature_dims(ds->data);
        *out = ds.release();
    });
}

amol_status amol_dataset_simulate(int setting, size_t n, uint64_t seed, amol_dataset** out) {
    return guarded([&] {
        need(out, "out");
        if (n == 0) amol::fail(amol::ErrorCode::invalid_argument, "n must be positive");
        auto ds = std::make_unique<amol_dataset>();
        ds->data = to_setting(setting) == amol::Setting::one ? amol::gen_setting1(n, seed)
                                                             : amol::gen_setting2(n, seed);
        *out = ds.release();
    });
}

amol_status amol_dataset_write(const amol_dataset* data, const char* csv_path, const char* schema_path) {
    return guarded([&] {
        need(data, "dataset");
        need(csv_path, "csv_path");
        amol::write_csv(std::string(csv_path), data->data);
        if (schema_path)
            amol::write_schema(amol::default_schema(amol::dataset_feature_dims(data->data)), schema_path);
    });
}

size_t amol_dataset_size(const amol_dataset* data) { return data ? data->data.size() : 0; }

size_t amol_dataset_stages(const amol_dataset* data) {
    return data && !data->data.empty() ? data->data.front().num_stages() : 0;
}

void amol_dataset_free(amol_dataset* data) { delete data; }

amol_status amol_fit(const amol_dataset* data, const char* method, const char* config_json, amol_model** out) {
    return guarded([&] {
        need(data, "dataset");
        need(method, "method");
        need(out, "out");
        const auto config = amol::config_from_json(parse_optional(config_json));
        const auto report = amol::fit(amol::parse_method(method), data->data, config);
        auto model = std::make_unique<amol_model>();
        model->regimen = report.regimen;
        model->document = amol::fit_report_to_json(report, config);
        *out = model.release();
    });
}

amol_status amol_model_load(const char* path, amol_model** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        auto model = std::make_unique<amol_model>();
        model->document = amol::read_json_file(path);
        model->regimen = amol::model_from_json(model->document);
        *out = model.release();
    });
}

amol_status amol_model_to_json(const amol_model* model, char** out_json) {
    return guarded([&] {
        need(model, "model");
        need(out_json, "out_json");
        *out_json = dup_string(model->document.dump(2));
    });
}

amol_status amol_model_save(const amol_model* model, const char* path) {
    return guarded([&] {
        need(model, "model");
        need(path, "path");
        amol::write_text_file(path, model->document.dump(2) + "\n");
    });
}

amol_status amol_model_decide(const amol_model* model, size_t stage, const double* history, size_t len,
                              int* out_action) {
    return guarded([&] {
        need(model, "model");
        need(out_action, "out_action");
        if (len > 0) need(history, "history");
        if (stage >= model->regimen.num_stages())
            amol::fail(amol::ErrorCode::invalid_argument, "stage out of range");
        *out_action = amol::decide(model->regimen.rules[stage], std::span<const double>(history, len));
    });
}

void amol_model_free(amol_model* model) { delete model; }

amol_status amol_evaluate(const amol_model* model, const amol_dataset* data, char** out_json) {
    return guarded([&] {
        need(model, "model");
        need(data, "dataset");
        need(out_json, "out_json");
        const auto dims = amol::dataset_feature_dims(data->data);
        if (dims.size() != model->regimen.num_stages())
            amol::fail(amol::ErrorCode::dimension_mismatch, "model and dataset stage counts differ");
        *out_json = dup_string(amol::value_to_json(amol::estimate_value(model->regimen, data->data)).dump(2));
    });
}

amol_status amol_cv_cost(const amol_dataset* data, const char* method, const char* config_json, char** out_json) {
    return guarded([&] {
        need(data, "dataset");
        need(method, "method");
        need(out_json, "out_json");
        const auto config = amol::config_from_json(parse_optional(config_json));
        const auto m = amol::parse_method(method);
        const auto report = amol::fit(m, data->data, config);
        nlohmann::json stages = nlohmann::json::array();
        for (std::size_t k = 0; k < report.stages.size(); ++k) {
            amol::CostSelection sel{report.stages[k].cost, report.stages[k].cost_curve};
            auto js = amol::cost_selection_to_json(sel, k);
            js["samples"] = report.stages[k].samples;
            stages.push_back(std::move(js));
        }
        *out_json = dup_string(nlohmann::json{{"method", method}, {"config", amol::config_to_json(config)},
                                              {"stages", stages}}
                                   .dump(2));
    });
}

amol_status amol_benchmark_run(const char* spec_json, amol_benchmark** out) {
    return guarded([&] {
        need(out, "out");
        const auto j = parse_optional(spec_json);
        amol::ScenarioSpec spec;
        std::vector<amol::Method> methods = {amol::Method::qlearning, amol::Method::olearning,
                                             amol::Method::amol_simple, amol::Method::amol_efficient};
        std::size_t threads = 0;
        amol::LearnerConfig config;
        if (!j.is_null()) {
            spec.setting = to_setting(j.value("setting", 2));
            spec.n_train = j.value("n_train", spec.n_train);
            spec.n_test = j.value("n_test", spec.n_test);
            spec.replicates = j.value("replicates", spec.replicates);
            spec.seed = j.value("seed", spec.seed);
            threads = j.value("threads", threads);
            if (j.contains("methods")) {
                methods.clear();
                for (const auto& m : j["methods"]) methods.push_back(amol::parse_method(m.get<std::string>()));
            }
            if (j.contains("config")) config = amol::config_from_json(j["config"]);
        }
        auto b = std::make_unique<amol_benchmark>();
        b->report = amol::run_benchmark(spec, methods, config, threads);
        *out = b.release();
    });
}

amol_status amol_benchmark_summary_json(const amol_benchmark* report, int include_runtime, char** out_json) {
    return guarded([&] {
        need(report, "report");
        need(out_json, "out_json");
        *out_json = dup_string(amol::benchmark_summary_json(report->report, include_runtime != 0).dump(2));
    });
}

amol_status amol_benchmark_write(const amol_benchmark* report, const char* csv_path, const char* json_path) {
    return guarded([&] {
        need(report, "report");
        if (csv_path) {
            std::ofstream out(csv_path, std::ios::binary);
            if (!out) amol::fail(amol::ErrorCode::io, std::string("cannot write '") + csv_path + "'");
            amol::write_benchmark_csv(out, report->report);
        }
        if (json_path)
            amol::write_text_file(json_path, amol::benchmark_summary_json(report->report).dump(2) + "\n");
    });
}

double amol_benchmark_runtime(const amol_benchmark* report) { return report ? report->report.runtime_seconds : 0.0; }

void amol_benchmark_free(amol_benchmark* report) { delete report; }

}  // extern "C"
