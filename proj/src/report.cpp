#include "rotwin/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "rotwin/errors.hpp"

namespace rotwin {

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

InferenceResult degenerate_result(Measure measure, double estimate, const std::string& note,
                                  double alpha, bool stratified) {
    InferenceResult r;
    r.measure = measure;
    r.estimate = estimate;
    r.log_scale = measure != Measure::RNB;
    r.ci_lower = r.ci_upper = estimate;
    r.p_value = 1.0;
    r.alpha = alpha;
    r.stratified = stratified;
    r.degenerate = true;
    r.note = note;
    return r;
}

const char* measure_name(Measure m) {
    switch (m) {
        case Measure::RWR: return "rwr";
        case Measure::RNB: return "rnb";
        default: return "rwo";
    }
}

} // namespace

AnalysisReport analyze(std::span<const Subject> subjects, std::span<const EndpointSpec> specs,
                       const Hierarchy& hierarchy, const AnalysisOptions& options) {
    const std::vector<EndpointSpec> spec_vec(specs.begin(), specs.end());
    const auto findings = validate_hierarchy(hierarchy, spec_vec, options.rotation_cap);
    if (!findings.empty()) {
        std::string msg = "invalid study configuration:";
        for (const auto& f : findings) msg += "\n  - " + f.message;
        throw ConfigError(msg);
    }
    const RotationSet rotations = build_rotation_set(hierarchy, options.rotation_cap);

    AnalysisReport report;
    report.p = rotations.rotation_count();
    report.q = rotations.endpoint_count;
    report.alpha = options.alpha;
    report.stratified = options.stratified;

    // Partition subjects by stratum (one pooled stratum when unstratified).
    std::map<std::string, std::pair<std::vector<Subject>, std::vector<Subject>>> groups;
    for (const auto& s : subjects) {
        const std::string key = options.stratified ? s.stratum : std::string("all");
        auto& g = groups[key];
        (s.arm == Arm::Treatment ? g.first : g.second).push_back(s);
        (s.arm == Arm::Treatment ? report.n_treated : report.n_controls) += 1;
    }
    if (report.n_treated == 0 || report.n_controls == 0)
        throw AnalysisError("analysis requires nonempty treatment and control arms");

    auto weight_of = [&](const std::string& key) {
        const auto it = options.stratum_weights.find(key);
        return it == options.stratum_weights.end() ? 1.0 : it->second;
    };

    // Undersized strata cannot contribute a variance; the remedy (exclusion)
    // must be requested explicitly.
    std::vector<std::string> undersized;
    for (const auto& [key, g] : groups)
        if (g.first.size() < 2 || g.second.size() < 2) undersized.push_back(key);
    if (!undersized.empty() && !options.exclude_undersized) {
        std::string msg = "strata too small for variance estimation (need >= 2 subjects per arm):";
        for (const auto& k : undersized) msg += " '" + k + "'";
        msg += "; rerun with exclude_undersized to drop them";
        throw AnalysisError(msg);
    }

    struct StratumWork {
        std::string key;
        double weight;
        WinCounts counts;
        CovarianceMatrix cov, null_cov;
    };
    std::vector<StratumWork> work;
    for (const auto& [key, g] : groups) {
        StratumSummary summary;
        summary.key = key;
        summary.n_treated = static_cast<int>(g.first.size());
        summary.n_controls = static_cast<int>(g.second.size());
        summary.weight = weight_of(key);
        summary.excluded =
            std::find(undersized.begin(), undersized.end(), key) != undersized.end();
        report.strata.push_back(summary);
        if (summary.excluded) {
            report.warnings.push_back("stratum '" + key + "' excluded: fewer than 2 subjects per arm");
            continue;
        }
        CompareOptions copt;
        copt.threads = options.threads;
        PairwiseAnalysis analysis(g.first, g.second, rotations, specs, copt);
        const PairJointStats stats = PairJointStats::build(analysis, options.threads);
        const ThetaVector theta = estimate_theta(analysis.counts());
        StratumWork w;
        w.key = key;
        w.weight = summary.weight;
        w.counts = analysis.counts();
        w.cov = covariance_matrix(stats, theta);
        w.null_cov = covariance_matrix(stats, null_centering(theta));
        work.push_back(std::move(w));
    }
    if (work.empty()) throw AnalysisError("no stratum large enough to analyze");

    // Inference.
    if (!options.stratified) {
        const auto& w = work.front();
        try {
            report.rwr = rwr_inference(w.counts, w.cov, w.null_cov, options.alpha);
        } catch (const AnalysisError& e) {
            report.rwr = degenerate_result(Measure::RWR, rwr_estimate(w.counts), e.what(),
                                           options.alpha, false);
            report.warnings.push_back(std::string("rwr: ") + e.what());
        }
        const RnbRwoResults nbwo = rnb_rwo_inference(w.counts, w.cov, w.null_cov, options.alpha);
        report.rnb = nbwo.rnb;
        report.rwo = nbwo.rwo;
    } else {
        std::vector<StratumInput> input;
        input.reserve(work.size());
        for (const auto& w : work)
            input.push_back({w.key, w.weight, w.counts, w.cov, w.null_cov});
        try {
            const StratifiedResults res = stratified_inference(input, options.alpha);
            report.rwr = res.rwr;
            report.rnb = res.rnb;
            report.rwo = res.rwo;
        } catch (const AnalysisError& e) {
            double wins = 0.0, losses = 0.0;
            for (const auto& w : work)
                for (int k = 0; k < w.counts.p; ++k) {
                    wins += w.weight * static_cast<double>(w.counts.wins[static_cast<std::size_t>(k)]);
                    losses +=
                        w.weight * static_cast<double>(w.counts.losses[static_cast<std::size_t>(k)]);
                }
            const double est = losses > 0.0 ? wins / losses
                                            : (wins > 0.0 ? std::numeric_limits<double>::infinity()
                                                          : std::numeric_limits<double>::quiet_NaN());
            report.rwr = degenerate_result(Measure::RWR, est, e.what(), options.alpha, true);
            report.rnb = degenerate_result(Measure::RNB, 0.0, e.what(), options.alpha, true);
            report.rwo = degenerate_result(Measure::RWO, 1.0, e.what(), options.alpha, true);
            report.warnings.push_back(std::string("stratified inference: ") + e.what());
        }
    }
    for (const InferenceResult* r : {&report.rnb, &report.rwo})
        if (r->degenerate)
            report.warnings.push_back(std::string(measure_name(r->measure)) + ": " + r->note);

    // Decomposition and the per-rotation table use weighted counts.
    std::vector<WinCounts> counts_list;
    std::vector<double> weight_list;
    for (const auto& w : work) {
        counts_list.push_back(w.counts);
        weight_list.push_back(w.weight);
    }
    report.decomposition =
        options.stratified
            ? decompose_stratified(counts_list, weight_list, hierarchy, specs)
            : decompose(work.front().counts, hierarchy, specs);

    for (int k = 0; k < report.p; ++k) {
        RotationTableRow row;
        double tot_w = 0.0, tot_l = 0.0;
        for (int pos = 0; pos < report.q; ++pos) {
            const int e = rotations.orders[static_cast<std::size_t>(k)][static_cast<std::size_t>(pos)];
            row.endpoint_ids.push_back(specs[static_cast<std::size_t>(e)].id);
            double w_pos = 0.0, l_pos = 0.0;
            for (std::size_t s = 0; s < work.size(); ++s) {
                const double ws = work[s].weight;
                w_pos += ws * static_cast<double>(
                                  work[s].counts.wins_at[static_cast<std::size_t>(k)]
                                                        [static_cast<std::size_t>(pos)]);
                l_pos += ws * static_cast<double>(
                                  work[s].counts.losses_at[static_cast<std::size_t>(k)]
                                                          [static_cast<std::size_t>(pos)]);
            }
            tot_w += w_pos;
            tot_l += l_pos;
            row.endpoint_wr.push_back(l_pos > 0.0 ? std::optional<double>(w_pos / l_pos)
                                                  : std::nullopt);
        }
        row.overall_wr = tot_l > 0.0 ? std::optional<double>(tot_w / tot_l) : std::nullopt;
        report.rotation_table.push_back(std::move(row));
    }

    if (report.decomposition.rows.back().tie_pct > 0.0 &&
        std::fabs(report.decomposition.rows.back().tie_pct - 100.0) < 1e-12)
        report.warnings.push_back("all pairwise comparisons are ties");

    if (options.bootstrap_replicates > 0) {
        BootstrapOptions bopt;
        bopt.replicates = options.bootstrap_replicates;
        bopt.seed = options.seed;
        bopt.alpha = options.alpha;
        bopt.threads = options.threads;
        bopt.rotation_cap = options.rotation_cap;
        try {
            report.bootstrap = bootstrap_ci(subjects, hierarchy, specs, bopt, options.stratified,
                                            &options.stratum_weights);
            if (report.bootstrap->degenerate_warning)
                report.warnings.push_back(
                    "bootstrap: more than 10% of resamples were degenerate (" +
                    std::to_string(report.bootstrap->skipped_degenerate) + " of " +
                    std::to_string(report.bootstrap->requested) + ")");
        } catch (const AnalysisError& e) {
            report.warnings.push_back(std::string("bootstrap: ") + e.what());
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json result_to_json(const InferenceResult& r) {
    nlohmann::ordered_json j;
    j["estimate"] = r.estimate;
    j["ci_lower"] = r.ci_lower;
    j["ci_upper"] = r.ci_upper;
    j["p_value"] = r.p_value;
    j["variance"] = r.variance;
    j["log_scale"] = r.log_scale;
    j["alpha"] = r.alpha;
    j["stratified"] = r.stratified;
    j["degenerate"] = r.degenerate;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

} // namespace

nlohmann::ordered_json report_to_json(const AnalysisReport& report) {
    nlohmann::ordered_json j;
    j["format"] = "rotwin-analysis-report";
    j["schema_version"] = 1;
    j["n_treated"] = report.n_treated;
    j["n_controls"] = report.n_controls;
    j["rotations"] = report.p;
    j["endpoints"] = report.q;
    j["alpha"] = report.alpha;
    j["stratified"] = report.stratified;
    j["measures"]["rwr"] = result_to_json(report.rwr);
    j["measures"]["rnb"] = result_to_json(report.rnb);
    j["measures"]["rwo"] = result_to_json(report.rwo);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : report.decomposition.rows) {
        nlohmann::ordered_json r;
        r["block"] = row.label;
        r["win_pct"] = row.win_pct;
        r["tie_pct"] = row.tie_pct;
        r["loss_pct"] = row.loss_pct;
        if (row.win_ratio)
            r["block_wr"] = *row.win_ratio;
        else
            r["block_wr"] = nullptr;
        rows.push_back(r);
    }
    j["decomposition"] = rows;

    nlohmann::ordered_json rots = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < report.rotation_table.size(); ++k) {
        const auto& row = report.rotation_table[k];
        nlohmann::ordered_json r;
        r["rotation"] = k + 1;
        r["order"] = row.endpoint_ids;
        nlohmann::ordered_json wrs = nlohmann::ordered_json::array();
        for (const auto& v : row.endpoint_wr)
            wrs.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
        r["endpoint_wr"] = wrs;
        r["overall_wr"] =
            row.overall_wr ? nlohmann::ordered_json(*row.overall_wr) : nlohmann::ordered_json(nullptr);
        rots.push_back(r);
    }
    j["per_rotation"] = rots;

    nlohmann::ordered_json strata = nlohmann::ordered_json::array();
    for (const auto& s : report.strata) {
        nlohmann::ordered_json r;
        r["stratum"] = s.key;
        r["n_treated"] = s.n_treated;
        r["n_controls"] = s.n_controls;
        r["weight"] = s.weight;
        r["excluded"] = s.excluded;
        strata.push_back(r);
    }
    j["strata"] = strata;

    if (report.bootstrap) {
        const auto& b = *report.bootstrap;
        nlohmann::ordered_json bj;
        bj["replicates"] = b.requested;
        bj["used"] = b.used;
        bj["skipped_degenerate"] = b.skipped_degenerate;
        bj["rwr"] = {{"lower", b.rwr.lower}, {"upper", b.rwr.upper}};
        bj["rnb"] = {{"lower", b.rnb.lower}, {"upper", b.rnb.upper}};
        bj["rwo"] = {{"lower", b.rwo.lower}, {"upper", b.rwo.upper}};
        j["bootstrap"] = bj;
    }
    j["warnings"] = report.warnings;
    return j;
}

std::string report_to_text(const AnalysisReport& report) {
    std::ostringstream out;
    out << "Rotation win statistics analysis\n";
    out << "--------------------------------\n";
    out << "Subjects: " << report.n_treated << " treatment / " << report.n_controls
        << " control";
    if (report.stratified) out << "   strata: " << report.strata.size();
    out << "   rotations: " << report.p << "\n\n";

    const double level = 100.0 * (1.0 - report.alpha);
    out << "Measure  Estimate     " << fmt(level, "%.0f") << "% CI                 P-value\n";
    auto line = [&](const char* name, const InferenceResult& r) {
        char buf[128];
        if (r.degenerate) {
            std::snprintf(buf, sizeof(buf), "%-8s %-12s %-22s %s\n", name,
                          fmt(r.estimate, "%.4f").c_str(), "--", ("degenerate: " + r.note).c_str());
        } else {
            const std::string ci =
                "[" + fmt(r.ci_lower, "%.4f") + ", " + fmt(r.ci_upper, "%.4f") + "]";
            std::snprintf(buf, sizeof(buf), "%-8s %-12s %-22s %.4g\n", name,
                          fmt(r.estimate, "%.4f").c_str(), ci.c_str(), r.p_value);
        }
        out << buf;
    };
    line("RWR", report.rwr);
    line("RNB", report.rnb);
    line("RWO", report.rwo);

    out << "\nBlock-level decomposition\n";
    out << "Block                          Wins %   Ties %   Losses %   Block WR\n";
    for (const auto& row : report.decomposition.rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-30s %-8s %-8s %-10s %s\n", row.label.c_str(),
                      fmt(row.win_pct, "%.2f").c_str(), fmt(row.tie_pct, "%.2f").c_str(),
                      fmt(row.loss_pct, "%.2f").c_str(),
                      row.win_ratio ? fmt(*row.win_ratio, "%.2f").c_str() : "--");
        out << buf;
    }

    out << "\nPer-rotation endpoint-level WR\n";
    for (std::size_t k = 0; k < report.rotation_table.size(); ++k) {
        const auto& row = report.rotation_table[k];
        out << "Rotation " << (k + 1) << ": ";
        for (std::size_t pos = 0; pos < row.endpoint_ids.size(); ++pos) {
            if (pos) out << "  ";
            out << row.endpoint_ids[pos] << "="
                << (row.endpoint_wr[pos] ? fmt(*row.endpoint_wr[pos], "%.3f") : std::string("--"));
        }
        out << "  overall="
            << (row.overall_wr ? fmt(*row.overall_wr, "%.3f") : std::string("--")) << "\n";
    }

    if (report.bootstrap) {
        const auto& b = *report.bootstrap;
        out << "\nBootstrap percentile intervals (" << b.used << "/" << b.requested
            << " resamples)\n";
        out << "RWR [" << fmt(b.rwr.lower, "%.4f") << ", " << fmt(b.rwr.upper, "%.4f") << "]  ";
        out << "RNB [" << fmt(b.rnb.lower, "%.4f") << ", " << fmt(b.rnb.upper, "%.4f") << "]  ";
        out << "RWO [" << fmt(b.rwo.lower, "%.4f") << ", " << fmt(b.rwo.upper, "%.4f") << "]\n";
    }

    if (!report.warnings.empty()) {
        out << "\nWarnings\n";
        for (const auto& w : report.warnings) out << "  - " << w << "\n";
    }
    return out.str();
}

} // namespace rotwin
