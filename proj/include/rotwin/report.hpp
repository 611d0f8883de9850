#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotwin/compare.hpp"
#include "rotwin/config.hpp"
#include "rotwin/inference.hpp"

namespace rotwin {

struct AnalysisOptions {
    double alpha = 0.05;
    bool stratified = false;
    bool exclude_undersized = false;
    int bootstrap_replicates = 0;
    std::uint64_t seed = 1;
    int threads = 0;
    std::int64_t rotation_cap = kDefaultRotationCap;
    std::map<std::string, double> stratum_weights;
};

// One row of the per-rotation table: the endpoint order in that rotation,
// the endpoint-level WR at each position, and the rotation's overall WR.
struct RotationTableRow {
    std::vector<std::string> endpoint_ids;
    std::vector<std::optional<double>> endpoint_wr; // empty where losses are zero
    std::optional<double> overall_wr;
};

struct StratumSummary {
    std::string key;
    int n_treated = 0;
    int n_controls = 0;
    double weight = 1.0;
    bool excluded = false;
};

struct AnalysisReport {
    int n_treated = 0;
    int n_controls = 0;
    int p = 0;
    int q = 0;
    double alpha = 0.05;
    bool stratified = false;
    InferenceResult rwr, rnb, rwo;
    Decomposition decomposition;
    std::vector<RotationTableRow> rotation_table;
    std::vector<StratumSummary> strata;
    std::vector<std::string> warnings;
    std::optional<BootstrapResult> bootstrap;
};

// compare -> inference (stratified when configured) -> decomposition.
// Degenerate data yields flagged results plus warnings rather than a failure.
AnalysisReport analyze(std::span<const Subject> subjects, std::span<const EndpointSpec> specs,
                       const Hierarchy& hierarchy, const AnalysisOptions& options);

nlohmann::ordered_json report_to_json(const AnalysisReport& report);
std::string report_to_text(const AnalysisReport& report);

} // namespace rotwin
