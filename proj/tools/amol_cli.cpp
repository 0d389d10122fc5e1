// Command-line front end over the C API.

#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "amol/amol.h"

namespace {

using nlohmann::json;

constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

struct Failure {
    int code;
    std::string message;
};

void check(amol_status s, const char* what) {
    if (s == AMOL_OK) return;
    const int code = (s == AMOL_ERR_INVALID_ARGUMENT || s == AMOL_ERR_SCHEMA) ? exit_usage : exit_runtime;
    throw Failure{code, std::string(what) + ": " + amol_status_name(s) + ": " + amol_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<amol_dataset, Deleter<amol_dataset, amol_dataset_free>>;
using Model = std::unique_ptr<amol_model, Deleter<amol_model, amol_model_free>>;
using Bench = std::unique_ptr<amol_benchmark, Deleter<amol_benchmark, amol_benchmark_free>>;

std::string take(char* s) {
    std::string out(s ? s : "");
    amol_string_free(s);
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

json kernel_json(const std::string& text) {
    if (text == "linear") return {{"kind", "linear"}};
    if (text == "gaussian") return {{"kind", "gaussian"}};
    if (text.rfind("gaussian:", 0) == 0) {
        try {
            return {{"kind", "gaussian"}, {"bandwidth", std::stod(text.substr(9))}};
        } catch (const std::exception&) {
        }
    }
    throw Failure{exit_usage, "--kernel must be linear, gaussian or gaussian:<sigma>"};
}

json cost_grid_json(const std::string& text) {
    json grid = json::array();
    for (const auto& item : split_list(text)) {
        try {
            grid.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Failure{exit_usage, "--cost-grid must be a comma-separated list of numbers"};
        }
    }
    return grid;
}

struct FitOptions {
    std::string method = "amol";
    std::string data, schema, kernel = "linear", cost_grid, config_file, out;
    std::size_t folds = 4;
    std::uint64_t seed = 0;
};

json resolve_config(const FitOptions& o) {
    json cfg = json::object();
    if (!o.config_file.empty()) {
        std::FILE* f = std::fopen(o.config_file.c_str(), "rb");
        if (!f) throw Failure{exit_runtime, "cannot open config '" + o.config_file + "'"};
        std::string text;
        char buf[4096];
        for (std::size_t r; (r = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, r);
        std::fclose(f);
        try {
            cfg = json::parse(text);
        } catch (const json::parse_error& e) {
            throw Failure{exit_usage, std::string("config is not valid JSON: ") + e.what()};
        }
    }
    cfg["kernel"] = kernel_json(o.kernel);
    if (!o.cost_grid.empty()) cfg["cost_grid"] = cost_grid_json(o.cost_grid);
    cfg["cost_folds"] = o.folds;
    cfg["seed"] = o.seed;
    return cfg;
}

void print_config(const std::string& command, const json& resolved) {
    std::cerr << "# " << command << " " << resolved.dump() << "\n";
}

void add_fit_options(CLI::App* cmd, FitOptions& o, bool need_out) {
    cmd->add_option("--method", o.method, "qlearn | olearn | amol | amol-eff")
        ->check(CLI::IsMember({"qlearn", "olearn", "amol", "amol-eff"}));
    cmd->add_option("--data", o.data, "dataset CSV")->required();
    cmd->add_option("--schema", o.schema, "dataset schema JSON")->required();
    cmd->add_option("--kernel", o.kernel, "linear | gaussian | gaussian:<sigma>");
    cmd->add_option("--cost-grid", o.cost_grid, "comma-separated solver costs");
    cmd->add_option("--folds", o.folds, "cost-selection folds")->check(CLI::Range(2, 1000));
    cmd->add_option("--seed", o.seed, "fold-assignment seed");
    cmd->add_option("--config", o.config_file, "learner configuration JSON");
    auto* out = cmd->add_option("--out", o.out, "output path");
    if (need_out) out->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimate multi-stage treatment regimens from sequential randomized trials"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "cap on worker threads (0 = all cores)");

    // simulate
    int sim_setting = 2;
    std::size_t sim_n = 200;
    std::uint64_t sim_seed = 1;
    std::string sim_out, sim_schema;
    auto* simulate = app.add_subcommand("simulate", "write a simulated trial as CSV plus schema");
    simulate->add_option("--setting", sim_setting)->check(CLI::IsMember({1, 2}))->required();
    simulate->add_option("--n", sim_n)->check(CLI::PositiveNumber)->required();
    simulate->add_option("--seed", sim_seed);
    simulate->add_option("--out", sim_out, "CSV path")->required();
    simulate->add_option("--schema-out", sim_schema, "schema path (default <out>.schema.json)");

    FitOptions fit_opts;
    auto* fitcmd = app.add_subcommand("fit", "fit a regimen and write the fit report JSON");
    add_fit_options(fitcmd, fit_opts, true);

    std::string ev_model, ev_data, ev_schema;
    auto* evaluate = app.add_subcommand("evaluate", "IPW value of a fitted regimen on a dataset");
    evaluate->add_option("--model", ev_model)->required();
    evaluate->add_option("--data", ev_data)->required();
    evaluate->add_option("--schema", ev_schema)->required();

    FitOptions cv_opts;
    auto* cv = app.add_subcommand("cv", "cost-selection curves per stage");
    add_fit_options(cv, cv_opts, false);

    int b_setting = 2;
    std::size_t b_n = 200, b_reps = 100, b_test = 10000;
    std::uint64_t b_seed = 1;
    std::string b_methods = "qlearn,olearn,amol,amol-eff", b_out, b_kernel = "linear", b_config;
    bool b_timing = false;
    auto* bench = app.add_subcommand("bench", "replicated simulation benchmark");
    bench->add_option("--setting", b_setting)->check(CLI::IsMember({1, 2}));
    bench->add_option("--n", b_n)->check(CLI::PositiveNumber);
    bench->add_option("--replicates", b_reps)->check(CLI::PositiveNumber);
    bench->add_option("--test-n", b_test)->check(CLI::PositiveNumber);
    bench->add_option("--seed", b_seed);
    bench->add_option("--methods", b_methods, "comma-separated methods");
    bench->add_option("--kernel", b_kernel);
    bench->add_option("--config", b_config, "learner configuration JSON");
    bench->add_option("--out", b_out, "output prefix: writes <out>.csv and <out>.json")->required();
    bench->add_flag("--timing", b_timing, "include runtime in the JSON summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*simulate) {
            if (sim_schema.empty()) {
                const auto dot = sim_out.rfind(".csv");
                sim_schema = (dot != std::string::npos && dot + 4 == sim_out.size() ? sim_out.substr(0, dot) : sim_out) +
                             ".schema.json";
            }
            print_config("simulate", {{"setting", sim_setting}, {"n", sim_n}, {"seed", sim_seed},
                                      {"out", sim_out}, {"schema_out", sim_schema}});
            amol_dataset* raw = nullptr;
            check(amol_dataset_simulate(sim_setting, sim_n, sim_seed, &raw), "simulate");
            Dataset data(raw);
            check(amol_dataset_write(data.get(), sim_out.c_str(), sim_schema.c_str()), "write");
            return 0;
        }

        if (*fitcmd || *cv) {
            const FitOptions& o = *fitcmd ? fit_opts : cv_opts;
            const json cfg = resolve_config(o);
            print_config(*fitcmd ? "fit" : "cv", {{"method", o.method}, {"data", o.data}, {"schema", o.schema},
                                                  {"out", o.out}, {"config", cfg}});
            amol_dataset* raw = nullptr;
            check(amol_dataset_load_csv(o.data.c_str(), o.schema.c_str(), &raw), "load");
            Dataset data(raw);
            const std::string cfg_text = cfg.dump();
            if (*fitcmd) {
                amol_model* m = nullptr;
                check(amol_fit(data.get(), o.method.c_str(), cfg_text.c_str(), &m), "fit");
                Model model(m);
                check(amol_model_save(model.get(), o.out.c_str()), "save");
                return 0;
            }
            char* text = nullptr;
            check(amol_cv_cost(data.get(), o.method.c_str(), cfg_text.c_str(), &text), "cv");
            const std::string report = take(text);
            if (o.out.empty()) {
                std::cout << report << "\n";
            } else {
                std::FILE* f = std::fopen(o.out.c_str(), "wb");
                if (!f) throw Failure{exit_runtime, "cannot write '" + o.out + "'"};
                std::fputs((report + "\n").c_str(), f);
                std::fclose(f);
            }
            return 0;
        }

        if (*evaluate) {
            print_config("evaluate", {{"model", ev_model}, {"data", ev_data}, {"schema", ev_schema}});
            amol_model* m = nullptr;
            check(amol_model_load(ev_model.c_str(), &m), "load model");
            Model model(m);
            amol_dataset* raw = nullptr;
            check(amol_dataset_load_csv(ev_data.c_str(), ev_schema.c_str(), &raw), "load");
            Dataset data(raw);
            char* text = nullptr;
            check(amol_evaluate(model.get(), data.get(), &text), "evaluate");
            std::cout << take(text) << "\n";
            return 0;
        }

        if (*bench) {
            json spec = {{"setting", b_setting}, {"n_train", b_n},   {"n_test", b_test},
                         {"replicates", b_reps}, {"seed", b_seed},   {"threads", threads},
                         {"methods", split_list(b_methods)}};
            FitOptions o;
            o.kernel = b_kernel;
            o.config_file = b_config;
            json cfg = resolve_config(o);
            cfg.erase("seed");  // per-replicate fold seeds derive from the benchmark seed
            spec["config"] = cfg;
            print_config("bench", spec);
            amol_benchmark* raw = nullptr;
            check(amol_benchmark_run(spec.dump().c_str(), &raw), "bench");
            Bench report(raw);
            const std::string csv = b_out + ".csv";
            const std::string js = b_out + ".json";
            check(amol_benchmark_write(report.get(), csv.c_str(), nullptr), "write");
            char* text = nullptr;
            check(amol_benchmark_summary_json(report.get(), b_timing ? 1 : 0, &text), "summary");
            const std::string summary = take(text);
            std::FILE* f = std::fopen(js.c_str(), "wb");
            if (!f) throw Failure{exit_runtime, "cannot write '" + js + "'"};
            std::fputs((summary + "\n").c_str(), f);
            std::fclose(f);
            std::cerr << "# runtime " << amol_benchmark_runtime(report.get()) << " s\n";
            const auto parsed = json::parse(summary);
            for (const auto& m : parsed["methods"])
                std::cout << m["method"].get<std::string>() << " mean=" << m["mean"].dump()
                          << " std=" << m["std"].dump() << " median=" << m["median"].dump()
                          << " failures=" << m["failures"].dump() << "\n";
            return 0;
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    }
    return exit_usage;
}
