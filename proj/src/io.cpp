#include "amol/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "amol/error.hpp"

namespace amol {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_format(const json& j, const char* kind) {
    if (!j.is_object() || j.value("format", std::string{}) != kind)
        fail(ErrorCode::parse, std::string("expected a '") + kind + "' document");
    const int v = j.value("version", 0);
    if (v != format_version)
        fail(ErrorCode::parse, std::string(kind) + " version " + std::to_string(v) + " is not supported");
}

}  // namespace

// ---------------------------------------------------------------------------

void validate_schema(const DatasetSchema& schema) {
    require(!schema.stages.empty(), ErrorCode::schema, "schema declares no stages");
    for (std::size_t k = 0; k < schema.stages.size(); ++k) {
        const auto& s = schema.stages[k];
        const std::string where = " (stage " + std::to_string(k + 1) + ")";
        if (s.action.empty() || s.reward.empty()) fail(ErrorCode::schema, "action and reward columns are required" + where);
        if (s.propensity.has_value() == s.propensity_constant.has_value())
            fail(ErrorCode::schema, "give exactly one of propensity column or constant" + where);
        if (s.propensity_constant && !(*s.propensity_constant > 0.0 && *s.propensity_constant < 1.0))
            fail(ErrorCode::schema, "propensity constant must lie in (0,1)" + where);
    }
}

json schema_to_json(const DatasetSchema& schema) {
    json stages = json::array();
    for (const auto& s : schema.stages) {
        json js = {{"features", s.features}, {"action", s.action}, {"reward", s.reward}};
        if (s.propensity) js["propensity"] = *s.propensity;
        if (s.propensity_constant) js["propensity_constant"] = *s.propensity_constant;
        if (s.eligible) js["eligible"] = *s.eligible;
        stages.push_back(std::move(js));
    }
    return {{"format", "amol-schema"}, {"version", format_version}, {"stages", stages}};
}

DatasetSchema schema_from_json(const json& j) {
    check_format(j, "amol-schema");
    DatasetSchema schema;
    try {
        for (const auto& js : j.at("stages")) {
            StageColumns s;
            s.features = js.value("features", std::vector<std::string>{});
            s.action = js.at("action").get<std::string>();
            s.reward = js.at("reward").get<std::string>();
            if (js.contains("propensity")) s.propensity = js["propensity"].get<std::string>();
            if (js.contains("propensity_constant")) s.propensity_constant = js["propensity_constant"].get<double>();
            if (js.contains("eligible")) s.eligible = js["eligible"].get<std::string>();
            schema.stages.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::schema, std::string("malformed schema: ") + e.what());
    }
    validate_schema(schema);
    return schema;
}

DatasetSchema read_schema(const std::string& path) { return schema_from_json(read_json_file(path)); }

void write_schema(const DatasetSchema& schema, const std::string& path) {
    write_text_file(path, schema_to_json(schema).dump(2) + "\n");
}

DatasetSchema default_schema(const std::vector<std::size_t>& feature_dims) {
    DatasetSchema schema;
    for (std::size_t k = 0; k < feature_dims.size(); ++k) {
        const std::string n = std::to_string(k + 1);
        StageColumns s;
        for (std::size_t d = 0; d < feature_dims[k]; ++d) s.features.push_back("x" + n + "_" + std::to_string(d + 1));
        s.action = "a" + n;
        s.reward = "r" + n;
        s.propensity = "p" + n;
        s.eligible = "e" + n;
        schema.stages.push_back(std::move(s));
    }
    return schema;
}

// ---------------------------------------------------------------------------

std::vector<std::string> split_csv_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (quoted) fail(ErrorCode::parse, "unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

namespace {

struct CellReader {
    const std::vector<std::string>& fields;
    const std::map<std::string, std::size_t>& index;
    std::size_t line;

    std::string where(const std::string& col) const {
        return " at line " + std::to_string(line) + ", column '" + col + "'";
    }

    const std::string& raw(const std::string& col) const { return fields[index.at(col)]; }

    bool empty(const std::string& col) const {
        return raw(col).find_first_not_of(" \t") == std::string::npos;
    }

    double number(const std::string& col) const {
        if (empty(col)) fail(ErrorCode::parse, "missing required cell" + where(col));
        std::string s = raw(col);
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = s.substr(b, e - b + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
            fail(ErrorCode::parse, "malformed number '" + s + "'" + where(col));
        return v;
    }

    bool flag(const std::string& col) const {
        std::string s = raw(col);
        if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
        if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
        fail(ErrorCode::parse, "eligibility must be 1/0 or true/false" + where(col));
    }
};

}  // namespace

std::vector<Trajectory> parse_csv(std::istream& in, const DatasetSchema& schema) {
    validate_schema(schema);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::parse, "empty CSV input");
    const auto header = split_csv_record(line);
    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < header.size(); ++c) index.emplace(header[c], c);
    auto need = [&](const std::string& col) {
        if (!index.count(col)) fail(ErrorCode::schema, "CSV header lacks column '" + col + "'");
    };
    for (const auto& s : schema.stages) {
        for (const auto& f : s.features) need(f);
        need(s.action);
        need(s.reward);
        if (s.propensity) need(*s.propensity);
        if (s.eligible) need(*s.eligible);
    }

    std::vector<Trajectory> data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_record(line);
        if (fields.size() != header.size())
            fail(ErrorCode::parse, "malformed row at line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(header.size()) + " fields, found " +
                                       std::to_string(fields.size()));
        const CellReader cell{fields, index, line_no};
        Trajectory t;
        for (const auto& sc : schema.stages) {
            StageObservation s;
            s.eligible = sc.eligible ? cell.flag(*sc.eligible) : true;
            // Ineligible stages may leave any cell blank: features and reward
            // default to 0, the action to +1.
            for (const auto& f : sc.features)
                s.features.push_back(!s.eligible && cell.empty(f) ? 0.0 : cell.number(f));
            if (!s.eligible && cell.empty(sc.action)) {
                s.action = 1;
            } else {
                const double a = cell.number(sc.action);
                if (a != 1.0 && a != -1.0)
                    fail(ErrorCode::parse, "action must be -1 or +1" + cell.where(sc.action));
                s.action = static_cast<int>(a);
            }
            s.reward = !s.eligible && cell.empty(sc.reward) ? 0.0 : cell.number(sc.reward);
            if (!s.eligible) {
                s.propensity = 1.0;
            } else if (sc.propensity_constant) {
                s.propensity = *sc.propensity_constant;
            } else {
                s.propensity = cell.number(*sc.propensity);
                if (!(s.propensity > 0.0 && s.propensity < 1.0))
                    fail(ErrorCode::parse, "propensity must lie in (0,1)" + cell.where(*sc.propensity));
            }
            t.stages.push_back(std::move(s));
        }
        data.push_back(std::move(t));
    }
    if (data.empty()) fail(ErrorCode::parse, "CSV has no data rows");
    return data;
}

std::vector<Trajectory> load_csv(const std::string& path, const DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
    return parse_csv(in, schema);
}

void write_csv(std::ostream& out, const std::vector<Trajectory>& data) {
    const auto dims = dataset_feature_dims(data);
    const auto schema = default_schema(dims);
    bool first = true;
    auto put = [&](const std::string& s) {
        if (!first) out << ',';
        out << s;
        first = false;
    };
    for (const auto& s : schema.stages) {
        for (const auto& f : s.features) put(f);
        put(s.action);
        put(s.reward);
        put(*s.propensity);
        put(*s.eligible);
    }
    out << '\n';
    for (const auto& t : data) {
        first = true;
        for (const auto& s : t.stages) {
            for (double x : s.features) put(fmt17(x));
            put(std::to_string(s.action));
            put(fmt17(s.reward));
            put(fmt17(s.eligible ? s.propensity : 1.0));
            put(s.eligible ? "1" : "0");
        }
        out << '\n';
    }
}

void write_csv(const std::string& path, const std::vector<Trajectory>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
    write_csv(out, data);
}

// ---------------------------------------------------------------------------

json kernel_to_json(const KernelSpec& k) {
    if (k.kind == KernelSpec::Kind::linear) return {{"kind", "linear"}};
    return {{"kind", "gaussian"}, {"bandwidth", k.bandwidth}};
}

KernelSpec kernel_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear") return KernelSpec::linear();
    if (kind == "gaussian") return KernelSpec::gaussian(j.at("bandwidth").get<double>());
    fail(ErrorCode::parse, "unknown kernel kind '" + kind + "'");
}

json scheme_to_json(const HistoryScheme& s) {
    return {{"actions", s.actions},
            {"rewards", s.rewards},
            {"action_feature_interactions", s.action_feature_interactions},
            {"action_reward_interactions", s.action_reward_interactions},
            {"cumulative_interactions", s.cumulative_interactions}};
}

HistoryScheme scheme_from_json(const json& j) {
    HistoryScheme s;
    s.actions = j.value("actions", s.actions);
    s.rewards = j.value("rewards", s.rewards);
    s.action_feature_interactions = j.value("action_feature_interactions", s.action_feature_interactions);
    s.action_reward_interactions = j.value("action_reward_interactions", s.action_reward_interactions);
    s.cumulative_interactions = j.value("cumulative_interactions", s.cumulative_interactions);
    return s;
}

json regimen_to_json(const Regimen& r) {
    json rules = json::array();
    for (const auto& rule : r.rules) {
        if (const auto* lin = std::get_if<LinearRule>(&rule)) {
            rules.push_back({{"kind", "linear"}, {"bias", lin->bias}, {"coefficients", lin->coefficients}});
        } else {
            const auto& ker = std::get<KernelRule>(rule);
            rules.push_back({{"kind", "kernel"},
                             {"kernel", kernel_to_json(ker.kernel)},
                             {"bias", ker.bias},
                             {"support", ker.support},
                             {"multipliers", ker.multipliers}});
            if (!ker.input_scale.empty()) rules.back()["input_scale"] = ker.input_scale;
        }
    }
    return {{"format", "amol-regimen"}, {"version", format_version}, {"scheme", scheme_to_json(r.scheme)}, {"rules", rules}};
}

Regimen regimen_from_json(const json& j) {
    check_format(j, "amol-regimen");
    Regimen r;
    try {
        r.scheme = scheme_from_json(j.at("scheme"));
        for (const auto& jr : j.at("rules")) {
            const auto kind = jr.at("kind").get<std::string>();
            if (kind == "linear") {
                r.rules.push_back(LinearRule{jr.at("bias").get<double>(),
                                             jr.at("coefficients").get<std::vector<double>>()});
            } else if (kind == "kernel") {
                KernelRule k{jr.at("support").get<std::vector<std::vector<double>>>(),
                             jr.at("multipliers").get<std::vector<double>>(), jr.at("bias").get<double>(),
                             kernel_from_json(jr.at("kernel")),
                             jr.value("input_scale", std::vector<double>{})};
                if (k.support.size() != k.multipliers.size())
                    fail(ErrorCode::parse, "kernel rule support and multiplier counts differ");
                r.rules.push_back(std::move(k));
            } else {
                fail(ErrorCode::parse, "unknown rule kind '" + kind + "'");
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("malformed regimen: ") + e.what());
    }
    return r;
}

json config_to_json(const LearnerConfig& c) {
    json kernel = {{"kind", c.kernel.kind == KernelSpec::Kind::linear ? "linear" : "gaussian"}};
    if (c.kernel.bandwidth) kernel["bandwidth"] = *c.kernel.bandwidth;
    return {{"scheme", scheme_to_json(c.scheme)},
            {"kernel", kernel},
            {"cost_grid", c.cost_grid},
            {"cost_folds", c.cost_folds},
            {"lasso_folds", c.lasso_folds},
            {"lasso_grid_size", c.lasso_grid_size},
            {"kkt_tolerance", c.kkt_tolerance},
            {"max_passes", c.max_passes},
            {"recentre", c.recentre},
            {"literal_boundary", c.literal_boundary},
            {"penalize_treatment", c.penalize_treatment},
            {"standardize", c.standardize},
            {"normalize_weights", c.normalize_weights},
            {"olearning_shift", c.olearning_shift == OLearningShift::minimum ? "minimum" : "only_if_negative"},
            {"seed", c.seed}};
}

LearnerConfig config_from_json(const json& j) {
    LearnerConfig c;
    if (j.is_null()) return c;
    try {
        if (j.contains("scheme")) c.scheme = scheme_from_json(j["scheme"]);
        if (j.contains("kernel")) {
            const auto& k = j["kernel"];
            const auto kind = k.value("kind", std::string("linear"));
            if (kind == "linear") {
                c.kernel.kind = KernelSpec::Kind::linear;
            } else if (kind == "gaussian") {
                c.kernel.kind = KernelSpec::Kind::gaussian;
                if (k.contains("bandwidth")) {
                    c.kernel.bandwidth = k["bandwidth"].get<double>();
                    KernelSpec::gaussian(*c.kernel.bandwidth);  // validates
                }
            } else {
                fail(ErrorCode::invalid_argument, "unknown kernel kind '" + kind + "'");
            }
        }
        c.cost_grid = j.value("cost_grid", c.cost_grid);
        c.cost_folds = j.value("cost_folds", c.cost_folds);
        c.lasso_folds = j.value("lasso_folds", c.lasso_folds);
        c.lasso_grid_size = j.value("lasso_grid_size", c.lasso_grid_size);
        c.kkt_tolerance = j.value("kkt_tolerance", c.kkt_tolerance);
        c.max_passes = j.value("max_passes", c.max_passes);
        c.recentre = j.value("recentre", c.recentre);
        c.literal_boundary = j.value("literal_boundary", c.literal_boundary);
        c.penalize_treatment = j.value("penalize_treatment", c.penalize_treatment);
        c.standardize = j.value("standardize", c.standardize);
        c.normalize_weights = j.value("normalize_weights", c.normalize_weights);
        const auto shift = j.value("olearning_shift", std::string("minimum"));
        if (shift == "minimum")
            c.olearning_shift = OLearningShift::minimum;
        else if (shift == "only_if_negative")
            c.olearning_shift = OLearningShift::only_if_negative;
        else
            fail(ErrorCode::invalid_argument, "unknown olearning_shift '" + shift + "'");
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed configuration: ") + e.what());
    }
    require(!c.cost_grid.empty(), ErrorCode::invalid_argument, "empty cost grid");
    require(c.cost_folds >= 2 && c.lasso_folds >= 2, ErrorCode::invalid_argument, "folds must be at least 2");
    return c;
}

json fit_report_to_json(const FitReport& r, const LearnerConfig& config) {
    json diag = json::array();
    for (std::size_t k = 0; k < r.stages.size(); ++k) {
        const auto& d = r.stages[k];
        json curve = json::array();
        for (const auto& p : d.cost_curve) curve.push_back({{"cost", p.cost}, {"score", p.score}});
        diag.push_back({{"stage", k + 1},
                        {"samples", d.samples},
                        {"support_vectors", d.support_vectors},
                        {"cost", d.cost},
                        {"lambda", d.lambda},
                        {"recentre_lambda", d.recentre_lambda},
                        {"negative_weight_fraction", d.negative_weight_fraction},
                        {"solver_status", d.solver_status},
                        {"cost_curve", curve}});
    }
    return {{"format", "amol-fit"},
            {"version", format_version},
            {"method", method_name(r.method)},
            {"config", config_to_json(config)},
            {"regimen", regimen_to_json(r.regimen)},
            {"diagnostics", diag}};
}

Regimen model_from_json(const json& j) {
    if (j.is_object() && j.value("format", std::string{}) == "amol-fit") {
        check_format(j, "amol-fit");
        return regimen_from_json(j.at("regimen"));
    }
    return regimen_from_json(j);
}

json value_to_json(const ValueEstimate& v) {
    return {{"value", v.value}, {"matched_fraction", v.matched_fraction}, {"n", v.n}};
}

json cost_selection_to_json(const CostSelection& s, std::size_t stage) {
    json curve = json::array();
    for (const auto& p : s.curve) curve.push_back({{"cost", p.cost}, {"score", p.score}});
    return {{"stage", stage + 1}, {"selected_cost", s.cost}, {"curve", curve}};
}

namespace {

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

json benchmark_summary_json(const BenchmarkReport& r, bool include_runtime) {
    json methods = json::array();
    for (const auto& m : r.methods) {
        json raw = json::array();
        for (double v : m.values) raw.push_back(number_or_null(v));
        methods.push_back({{"method", method_name(m.method)},
                           {"mean", number_or_null(m.mean)},
                           {"std", number_or_null(m.std)},
                           {"median", number_or_null(m.median)},
                           {"failures", m.failures},
                           {"values", raw}});
    }
    json out = {{"format", "amol-benchmark"},
                {"version", format_version},
                {"setting", static_cast<int>(r.spec.setting)},
                {"n_train", r.spec.n_train},
                {"n_test", r.spec.n_test},
                {"replicates", r.spec.replicates},
                {"seed", r.spec.seed},
                {"methods", methods}};
    if (include_runtime) out["runtime_seconds"] = r.runtime_seconds;
    return out;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkReport& r) {
    out << "replicate,method,value,status\n";
    for (std::size_t rep = 0; rep < r.spec.replicates; ++rep)
        for (const auto& m : r.methods) {
            const double v = m.values[rep];
            out << rep + 1 << ',' << method_name(m.method) << ',' << (std::isnan(v) ? "" : fmt17(v)) << ','
                << (std::isnan(v) ? "failed" : "ok") << '\n';
        }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::parse, "'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
    out << text;
    if (!out) fail(ErrorCode::io, "write to '" + path + "' failed");
}

}  // namespace amol
