#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "amol/core_model.hpp"
#include "amol/learners.hpp"
#include "amol/sim.hpp"
#include "amol/value.hpp"

namespace amol {

// ---------------------------------------------------------------------------
// Wide-format datasets: one subject per row.

struct StageColumns {
    std::vector<std::string> features;
    std::string action;
    std::string reward;
    std::optional<std::string> propensity;      // column name, or
    std::optional<double> propensity_constant;  // a design constant in (0,1)
    std::optional<std::string> eligible;        // 1/0 or true/false; absent means always eligible
};

struct DatasetSchema {
    std::vector<StageColumns> stages;

    std::size_t num_stages() const { return stages.size(); }
};

void validate_schema(const DatasetSchema& schema);

nlohmann::json schema_to_json(const DatasetSchema& schema);
DatasetSchema schema_from_json(const nlohmann::json& j);
DatasetSchema read_schema(const std::string& path);
void write_schema(const DatasetSchema& schema, const std::string& path);

/// Column layout used by write_csv: x<k>_<d>, a<k>, r<k>, p<k>, e<k> (1-based k).
DatasetSchema default_schema(const std::vector<std::size_t>& feature_dims);

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_record(const std::string& line);

std::vector<Trajectory> parse_csv(std::istream& in, const DatasetSchema& schema);
std::vector<Trajectory> load_csv(const std::string& path, const DatasetSchema& schema);

/// Writes with 17 significant digits so load_csv reproduces every value.
void write_csv(std::ostream& out, const std::vector<Trajectory>& data);
void write_csv(const std::string& path, const std::vector<Trajectory>& data);

// ---------------------------------------------------------------------------
// Versioned JSON documents.

inline constexpr int format_version = 1;

nlohmann::json kernel_to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const nlohmann::json& j);

nlohmann::json scheme_to_json(const HistoryScheme& s);
HistoryScheme scheme_from_json(const nlohmann::json& j);

nlohmann::json regimen_to_json(const Regimen& r);
Regimen regimen_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const LearnerConfig& c);
/// Missing keys keep their defaults.
LearnerConfig config_from_json(const nlohmann::json& j);

nlohmann::json fit_report_to_json(const FitReport& r, const LearnerConfig& config);
/// Accepts a fit report or a bare regimen document.
Regimen model_from_json(const nlohmann::json& j);

nlohmann::json value_to_json(const ValueEstimate& v);
nlohmann::json cost_selection_to_json(const CostSelection& s, std::size_t stage);

nlohmann::json benchmark_summary_json(const BenchmarkReport& r, bool include_runtime = false);
/// One row per replicate x method: replicate,method,value,status.
void write_benchmark_csv(std::ostream& out, const BenchmarkReport& r);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace amol
