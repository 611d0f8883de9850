#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "rotwin/simgen.hpp"

namespace rotwin {

enum class GapEffect { Homogeneous, Heterogeneous };

// Follow-up durations crossed with non-fatal effect configurations; the
// fatal-event effect comes from the base scenario.
struct CopulaStudyGrid {
    CopulaScenario base;
    std::vector<double> study_days;
    std::vector<std::array<double, 3>> alpha_nonfatal_configs;
};

// Fatal-event effect grid crossed with the maximum recurrence count and the
// gap-time effect pattern (all gaps vs first gap only).
struct FrailtyStudyGrid {
    FrailtyScenario base;
    std::vector<double> alpha_death;
    std::vector<int> j_values;
    std::vector<GapEffect> effects;
};

struct MethodFlags {
    bool rwr = true;
    bool rnb = false;
    bool rwo = false;
    bool wr_orders = false; // per-rotation standard WR plus derived best/worst/random
    bool wr_first = false;  // death > NRE > FRT
    bool wr_last = false;   // death > NRE > LRT
    bool logrank = false;
};

struct StudyConfig {
    std::variant<CopulaStudyGrid, FrailtyStudyGrid> grid;
    int replicates = 1000;
    double alpha = 0.05;
    MethodFlags methods;
    std::uint64_t seed = 1;
    int threads = 0;
    // Plug-in reference for coverage under alternatives: pooled counts over
    // reference_multiplier * replicates extra datasets on a separate stream.
    // 0 disables coverage tracking for non-null cells.
    int reference_multiplier = 10;
    // The reference estimates a population quantity, so it may be pooled at a
    // smaller per-arm size than the cells themselves; 0 = same as the cell.
    int reference_n_per_arm = 0;
    double max_failure_fraction = 0.01;
};

struct MethodSummary {
    std::string method;
    int used = 0;
    double rejection_rate = 0.0;
    double rejection_se = 0.0;
    bool coverage_tracked = false;
    double coverage = 0.0;
    double coverage_se = 0.0;
    double reference = 0.0; // value the CI is checked against
    double mean_estimate = 0.0;
    double estimate_se = 0.0;
};

struct CellKey {
    std::string scenario; // "copula" or "frailty"
    double study_days = 0.0;
    std::array<double, 3> alpha_nonfatal{0.0, 0.0, 0.0};
    double alpha_death = 0.0;
    int j = 0;                // frailty only
    std::string effect;       // "homogeneous"/"heterogeneous", frailty only
    std::string label() const;
};

struct CellResult {
    CellKey key;
    bool null_cell = false;
    std::string reference_source; // "exact_null" or "plug_in_pooled"
    int replicates_requested = 0;
    int replicates_used = 0;
    int failures = 0;
    std::vector<MethodSummary> methods;
    std::vector<std::string> notes; // soft checks, logged rather than failed

    const MethodSummary* find(const std::string& name) const;
};

struct StudyResult {
    std::string scenario_family;
    int replicates = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int reference_multiplier = 0;
    std::vector<CellResult> cells;
};

StudyResult run_study(const StudyConfig& config);

// Writes <dir>/results.csv (tidy long format) and <dir>/manifest.json.
// Re-running the same config and seed reproduces both files byte for byte.
void emit_results(const StudyResult& result, const std::string& out_dir);

} // namespace rotwin
