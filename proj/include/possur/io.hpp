#pragma once

// Dataset CSV, JSON run configuration and report emission.
//
// Dataset CSV: one row per subject, header columns y1..yJ, z, then
// covariates as c_<name>:<kind> with kind in {cont, bin, count}.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "possur/covariate_model.hpp"
#include "possur/pos_engine.hpp"
#include "possur/study.hpp"

namespace possur {

using Json = nlohmann::json;

TrialDataset read_dataset_csv(std::istream& in, const std::string& source = "<stream>");
TrialDataset load_dataset(const std::filesystem::path& path);
/// Doubles are written with 17 significant digits.
void write_dataset_csv(const TrialDataset& data, std::ostream& out);
void save_dataset(const TrialDataset& data, const std::filesystem::path& path);

struct RunConfig {
    std::filesystem::path historical;                   // D02
    std::optional<std::filesystem::path> older_historical;  // D01
    ModelSpec model;
    SuccessRegion region;
    PosConfig pos;
    ValidationSpec validation;
    double b01 = 0.0;
    double b02 = 1.0;
    /// Independent factors by column kind when absent.
    std::optional<CovariateChainSpec> chain;
    std::vector<Index> n_grid;
    std::optional<std::filesystem::path> output;
    std::string format = "json";
};

/// Relative dataset paths resolve against `base_dir`. An object with a
/// "config" member (an emitted report) is read through that member.
RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully resolved config (absolute dataset paths, every default spelled out).
Json to_json(const RunConfig& config);

Json region_to_json(const SuccessRegion& region);
SuccessRegion region_from_json(const Json& j);
Json chain_to_json(const CovariateChainSpec& chain);
CovariateChainSpec chain_from_json(const Json& j);
/// One independent factor per covariate used by `model`, family by column kind.
CovariateChainSpec default_chain(const ModelSpec& model, const TrialDataset& data);

/// Loads data and fits the covariate chain with weights (b02, b01).
PosInputs resolve_inputs(const RunConfig& config);

Json report_to_json(const PosReport& report);

/// Flat report row; scenario and correlation are set by the simulation study.
struct ReportRow {
    Index n = 0;
    std::string region;
    double a0 = 0.0, b01 = 0.0, b02 = 0.0;
    double pos_unadjusted = 0.0, pos_adjusted = 0.0, mc_se = 0.0;
    std::optional<double> comparator_rate;
    std::string scenario, correlation;
};

/// Header row plus one line per row; header only when `rows` is empty.
void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out);
/// Rows of an emitted JSON document ("pos", "curve", "study" or "study-table").
std::vector<ReportRow> rows_from_json(const Json& doc);

Json pos_document(const RunConfig& config, const PosReport& report);
Json curve_document(const RunConfig& config, const std::vector<PosReport>& reports);
Json study_document(const StudySpec& spec, const PosReport& report);
/// Several study documents, one per correlation setting.
Json study_table_document(const std::vector<Json>& entries);
StudySpec study_spec_from_json(const Json& j);

/// Writes `doc` as JSON or its CSV projection; throws Error when the path
/// cannot be opened.
void emit_document(const Json& doc, const std::filesystem::path& path, const std::string& format);
void emit_document(const Json& doc, std::ostream& out, const std::string& format);

}  // namespace possur
