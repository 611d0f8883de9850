#include "rotwin/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "rotwin/errors.hpp"
#include "rotwin/inference.hpp"
#include "rotwin/parallel.hpp"

namespace rotwin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct MethodSlot {
    std::string name;
    bool has_ci = false; // win statistics carry CIs; log-rank does not
};

// Per-replicate record for one method slot.
struct RepRecord {
    std::uint8_t valid = 0;
    std::uint8_t reject = 0;
    std::uint8_t cover = 0;
    double estimate = kNaN;
};

struct CellAccumulator {
    std::vector<MethodSlot> slots;
    std::vector<std::vector<RepRecord>> records; // [slot][replicate]
    std::vector<std::uint8_t> replicate_ok;
    std::vector<double> references;

    int slot_of(const std::string& name) const {
        for (std::size_t s = 0; s < slots.size(); ++s)
            if (slots[s].name == name) return static_cast<int>(s);
        return -1;
    }
};

double rate_se(double rate, int n) {
    return n > 0 ? std::sqrt(rate * (1.0 - rate) / static_cast<double>(n)) : 0.0;
}

// Splits a generated dataset (treated block first) without relying on order.
void split_arms(const std::vector<Subject>& all, std::vector<Subject>& treated,
                std::vector<Subject>& controls) {
    treated.clear();
    controls.clear();
    for (const auto& s : all)
        (s.arm == Arm::Treatment ? treated : controls).push_back(s);
}

struct WinStatInference {
    InferenceResult rwr;
    RnbRwoResults nbwo;
    std::vector<InferenceResult> per_order; // when requested
    bool per_order_ok = false;
};

// One full analysis of a dataset under a hierarchy: counts, covariance with
// observed and null centering, and the requested measures.
WinStatInference analyze_dataset(const std::vector<Subject>& treated,
                                 const std::vector<Subject>& controls,
                                 const RotationSet& rotations,
                                 std::span<const EndpointSpec> specs, double alpha,
                                 bool want_nbwo, bool want_orders) {
    CompareOptions copt;
    copt.threads = 1; // replicate-level parallelism owns the cores
    PairwiseAnalysis analysis(treated, controls, rotations, specs, copt);
    const WinCounts& counts = analysis.counts();
    const PairJointStats stats = PairJointStats::build(analysis, 1);
    const ThetaVector theta = estimate_theta(counts);
    const CovarianceMatrix cov = covariance_matrix(stats, theta);
    const CovarianceMatrix cov0 = covariance_matrix(stats, null_centering(theta));

    WinStatInference out;
    out.rwr = rwr_inference(counts, cov, cov0, alpha);
    if (want_nbwo) out.nbwo = rnb_rwo_inference(counts, cov, cov0, alpha);
    if (want_orders) {
        out.per_order.reserve(static_cast<std::size_t>(counts.p));
        for (int k = 0; k < counts.p; ++k)
            out.per_order.push_back(single_rotation_inference(counts, cov, cov0, k, alpha));
        out.per_order_ok = true;
    }
    return out;
}

struct PooledCounts {
    double wins = 0.0, losses = 0.0, pairs_scaled = 0.0;
    std::vector<double> wins_k, losses_k; // per rotation
    void absorb(const WinCounts& c) {
        if (wins_k.empty()) {
            wins_k.assign(static_cast<std::size_t>(c.p), 0.0);
            losses_k.assign(static_cast<std::size_t>(c.p), 0.0);
        }
        for (int k = 0; k < c.p; ++k) {
            wins += static_cast<double>(c.wins[static_cast<std::size_t>(k)]);
            losses += static_cast<double>(c.losses[static_cast<std::size_t>(k)]);
            wins_k[static_cast<std::size_t>(k)] += static_cast<double>(c.wins[static_cast<std::size_t>(k)]);
            losses_k[static_cast<std::size_t>(k)] += static_cast<double>(c.losses[static_cast<std::size_t>(k)]);
        }
        pairs_scaled += static_cast<double>(c.p) * static_cast<double>(c.pair_total());
    }
};

bool ci_covers(const InferenceResult& r, double reference) {
    return r.ci_lower <= reference && reference <= r.ci_upper;
}

} // namespace

std::string CellKey::label() const {
    std::string s = scenario;
    if (scenario == "copula") {
        s += " days=" + format_g(study_days);
        s += " aH=(" + format_g(alpha_nonfatal[0]) + "," + format_g(alpha_nonfatal[1]) + "," +
             format_g(alpha_nonfatal[2]) + ")";
        s += " aD=" + format_g(alpha_death);
    } else {
        s += " aD=" + format_g(alpha_death);
        s += " J=" + std::to_string(j);
        s += " " + effect;
    }
    return s;
}

const MethodSummary* CellResult::find(const std::string& name) const {
    for (const auto& m : methods)
        if (m.method == name) return &m;
    return nullptr;
}

namespace {

// Aggregates replicate records into per-method summaries and, when per-order
// rows exist, derives the best/worst/random-order comparators.
void summarise_cell(const StudyConfig& config, const CellAccumulator& acc,
                    std::uint64_t cell_key, CellResult& cell) {
    const int R = config.replicates;
    int ok = 0;
    for (const auto v : acc.replicate_ok) ok += v;
    cell.replicates_used = ok;
    cell.failures = R - ok;
    if (static_cast<double>(cell.failures) > config.max_failure_fraction * R)
        throw AnalysisError("cell '" + cell.key.label() + "': " + std::to_string(cell.failures) +
                            " of " + std::to_string(R) + " replicates failed");

    for (std::size_t s = 0; s < acc.slots.size(); ++s) {
        MethodSummary m;
        m.method = acc.slots[s].name;
        m.coverage_tracked = acc.slots[s].has_ci;
        m.reference = acc.references[s];
        int used = 0, rejects = 0, covers = 0;
        double est_sum = 0.0, est_sq = 0.0;
        for (int r = 0; r < R; ++r) {
            if (!acc.replicate_ok[static_cast<std::size_t>(r)]) continue;
            const RepRecord& rec = acc.records[s][static_cast<std::size_t>(r)];
            if (!rec.valid) continue;
            ++used;
            rejects += rec.reject;
            covers += rec.cover;
            est_sum += rec.estimate;
            est_sq += rec.estimate * rec.estimate;
        }
        m.used = used;
        if (used > 0) {
            m.rejection_rate = static_cast<double>(rejects) / used;
            m.rejection_se = rate_se(m.rejection_rate, used);
            m.coverage = static_cast<double>(covers) / used;
            m.coverage_se = rate_se(m.coverage, used);
            m.mean_estimate = est_sum / used;
            const double var = std::max(0.0, est_sq / used - m.mean_estimate * m.mean_estimate);
            m.estimate_se = std::sqrt(var / used);
        }
        cell.methods.push_back(std::move(m));
    }

    // Derived comparators over the artificial orders.
    std::vector<std::size_t> order_slots;
    for (std::size_t s = 0; s < acc.slots.size(); ++s)
        if (acc.slots[s].name.rfind("wr_order_", 0) == 0) order_slots.push_back(s);
    if (order_slots.empty()) return;

    std::size_t best = 0, worst = 0;
    for (std::size_t t = 1; t < order_slots.size(); ++t) {
        const double rt = cell.methods[order_slots[t]].rejection_rate;
        if (rt > cell.methods[order_slots[best]].rejection_rate) best = t;
        if (rt < cell.methods[order_slots[worst]].rejection_rate) worst = t;
    }
    MethodSummary wr_b = cell.methods[order_slots[best]];
    wr_b.method = "wr_b";
    MethodSummary wr_w = cell.methods[order_slots[worst]];
    wr_w.method = "wr_w";
    cell.methods.push_back(std::move(wr_b));
    cell.methods.push_back(std::move(wr_w));

    // Random order: one seeded pick per replicate.
    MethodSummary rnd;
    rnd.method = "wr_random";
    rnd.coverage_tracked = false;
    int used = 0, rejects = 0;
    double est_sum = 0.0, est_sq = 0.0;
    for (int r = 0; r < R; ++r) {
        if (!acc.replicate_ok[static_cast<std::size_t>(r)]) continue;
        Rng rng(cell_key, 2000000 + static_cast<std::uint64_t>(r));
        const std::size_t pick = std::min(
            order_slots.size() - 1,
            static_cast<std::size_t>(rng.uniform01() * static_cast<double>(order_slots.size())));
        const RepRecord& rec = acc.records[order_slots[pick]][static_cast<std::size_t>(r)];
        if (!rec.valid) continue;
        ++used;
        rejects += rec.reject;
        est_sum += rec.estimate;
        est_sq += rec.estimate * rec.estimate;
    }
    rnd.used = used;
    if (used > 0) {
        rnd.rejection_rate = static_cast<double>(rejects) / used;
        rnd.rejection_se = rate_se(rnd.rejection_rate, used);
        rnd.mean_estimate = est_sum / used;
        const double var = std::max(0.0, est_sq / used - rnd.mean_estimate * rnd.mean_estimate);
        rnd.estimate_se = std::sqrt(var / used);
    }
    cell.methods.push_back(std::move(rnd));

    // Soft check, logged not failed: RWR power tends to sit between the
    // worst and best artificial orders (an empirical pattern, not a theorem).
    const MethodSummary* rwr = cell.find("rwr");
    const MethodSummary* b = cell.find("wr_b");
    const MethodSummary* w = cell.find("wr_w");
    if (rwr && b && w) {
        const double slack_low =
            2.0 * std::sqrt(rwr->rejection_se * rwr->rejection_se + w->rejection_se * w->rejection_se);
        const double slack_high =
            2.0 * std::sqrt(rwr->rejection_se * rwr->rejection_se + b->rejection_se * b->rejection_se);
        if (rwr->rejection_rate < w->rejection_rate - slack_low ||
            rwr->rejection_rate > b->rejection_rate + slack_high)
            cell.notes.push_back("rwr rejection rate outside the [wr_w, wr_b] band by more than 2 SE");
    }
}

// ---------------------------------------------------------------------------
// Copula cells
// ---------------------------------------------------------------------------

CellResult run_copula_cell(const StudyConfig& config, const CopulaScenario& scenario,
                           const CellKey& key, std::uint64_t cell_key) {
    const MethodFlags& mf = config.methods;
    const RotationSet rotations = build_rotation_set(copula_hierarchy());
    const auto specs = copula_endpoints();
    const int p = rotations.rotation_count();
    const int R = config.replicates;
    const bool null_cell = scenario.is_null();

    // References the CIs are checked against.
    const bool track_coverage = null_cell || config.reference_multiplier > 0;
    double ref_rwr = 1.0, ref_rnb = 0.0, ref_rwo = 1.0;
    std::vector<double> ref_order(static_cast<std::size_t>(p), 1.0);
    if (!null_cell && track_coverage) {
        CopulaScenario ref_scenario = scenario;
        if (config.reference_n_per_arm > 0) ref_scenario.n_per_arm = config.reference_n_per_arm;
        PooledCounts pool;
        const int ref_reps = R * config.reference_multiplier;
        std::vector<WinCounts> per_rep(static_cast<std::size_t>(ref_reps));
        CompareOptions copt;
        copt.threads = 1;
        parallel_for(static_cast<std::size_t>(ref_reps), config.threads, [&](std::size_t r) {
            const auto data =
                generate_copula_dataset(ref_scenario, derive_stream(cell_key, 3000000 + r));
            std::vector<Subject> treated, controls;
            split_arms(data, treated, controls);
            per_rep[r] = count_wins_losses(treated, controls, rotations, specs, copt);
        });
        for (const auto& c : per_rep) pool.absorb(c);
        ref_rwr = pool.wins / pool.losses;
        ref_rnb = (pool.wins - pool.losses) / pool.pairs_scaled;
        const double ties = pool.pairs_scaled - pool.wins - pool.losses;
        ref_rwo = (pool.wins + 0.5 * ties) / (pool.losses + 0.5 * ties);
        for (int k = 0; k < p; ++k)
            ref_order[static_cast<std::size_t>(k)] =
                pool.wins_k[static_cast<std::size_t>(k)] / pool.losses_k[static_cast<std::size_t>(k)];
    }

    CellAccumulator acc;
    acc.slots.push_back({"rwr", track_coverage});
    acc.references.push_back(ref_rwr);
    if (mf.rnb) {
        acc.slots.push_back({"rnb", track_coverage});
        acc.references.push_back(ref_rnb);
    }
    if (mf.rwo) {
        acc.slots.push_back({"rwo", track_coverage});
        acc.references.push_back(ref_rwo);
    }
    if (mf.wr_orders)
        for (int k = 0; k < p; ++k) {
            acc.slots.push_back({"wr_order_" + std::to_string(k + 1), track_coverage});
            acc.references.push_back(ref_order[static_cast<std::size_t>(k)]);
        }
    if (mf.logrank) {
        acc.slots.push_back({"logrank", false});
        acc.references.push_back(kNaN);
    }
    acc.records.assign(acc.slots.size(), std::vector<RepRecord>(static_cast<std::size_t>(R)));
    acc.replicate_ok.assign(static_cast<std::size_t>(R), 0);

    parallel_for(static_cast<std::size_t>(R), config.threads, [&](std::size_t r) {
        try {
            const auto data =
                generate_copula_dataset(scenario, derive_stream(cell_key, 1000000 + r));
            std::vector<Subject> treated, controls;
            split_arms(data, treated, controls);
            const WinStatInference inf = analyze_dataset(treated, controls, rotations, specs,
                                                         config.alpha, mf.rnb || mf.rwo,
                                                         mf.wr_orders);
            int slot = 0;
            auto put = [&](const InferenceResult& res, double reference) {
                RepRecord rec;
                rec.valid = 1;
                rec.reject = res.p_value < config.alpha ? 1 : 0;
                rec.cover = ci_covers(res, reference) ? 1 : 0;
                rec.estimate = res.estimate;
                acc.records[static_cast<std::size_t>(slot)][r] = rec;
                ++slot;
            };
            put(inf.rwr, ref_rwr);
            if (mf.rnb) put(inf.nbwo.rnb, ref_rnb);
            if (mf.rwo) put(inf.nbwo.rwo, ref_rwo);
            if (mf.wr_orders)
                for (int k = 0; k < p; ++k)
                    put(inf.per_order[static_cast<std::size_t>(k)],
                        ref_order[static_cast<std::size_t>(k)]);
            if (mf.logrank) {
                const LogrankResult lr = composite_logrank(data, specs);
                RepRecord rec;
                rec.valid = 1;
                rec.reject = lr.p_value < config.alpha ? 1 : 0;
                rec.estimate = lr.statistic;
                acc.records[static_cast<std::size_t>(slot)][r] = rec;
            }
            acc.replicate_ok[r] = 1;
        } catch (const std::exception&) {
            // recorded and excluded below
        }
    });

    CellResult cell;
    cell.key = key;
    cell.null_cell = null_cell;
    cell.reference_source = null_cell ? "exact_null" : "plug_in_pooled";
    cell.replicates_requested = R;
    summarise_cell(config, acc, cell_key, cell);
    return cell;
}

// ---------------------------------------------------------------------------
// Frailty cells
// ---------------------------------------------------------------------------

CellResult run_frailty_cell(const StudyConfig& config, const FrailtyScenario& scenario,
                            const CellKey& key, std::uint64_t cell_key) {
    const MethodFlags& mf = config.methods;
    const auto specs = frailty_endpoints();
    const RotationSet rot_rwr = build_rotation_set(frailty_hierarchy());
    const Hierarchy three_level{{{0}, {1}, {2}}};
    const RotationSet rot_single = build_rotation_set(three_level);
    const std::vector<int> keep_f{0, 1, 2}, keep_l{0, 1, 3};
    const std::vector<EndpointSpec> specs_f{specs[0], specs[1], specs[2]};
    const std::vector<EndpointSpec> specs_l{specs[0], specs[1], specs[3]};
    const int R = config.replicates;
    const bool null_cell = scenario.is_null();

    const bool track_coverage = null_cell || config.reference_multiplier > 0;
    double ref_rwr = 1.0, ref_rnb = 0.0, ref_rwo = 1.0, ref_f = 1.0, ref_l = 1.0;
    if (!null_cell && track_coverage) {
        FrailtyScenario ref_scenario = scenario;
        if (config.reference_n_per_arm > 0) ref_scenario.n_per_arm = config.reference_n_per_arm;
        PooledCounts pool, pool_f, pool_l;
        const int ref_reps = R * config.reference_multiplier;
        struct RefCounts {
            WinCounts rwr, f, l;
        };
        std::vector<RefCounts> per_rep(static_cast<std::size_t>(ref_reps));
        CompareOptions copt;
        copt.threads = 1;
        parallel_for(static_cast<std::size_t>(ref_reps), config.threads, [&](std::size_t r) {
            const auto data =
                generate_frailty_dataset(ref_scenario, derive_stream(cell_key, 3000000 + r));
            std::vector<Subject> treated, controls;
            split_arms(data, treated, controls);
            per_rep[r].rwr = count_wins_losses(treated, controls, rot_rwr, specs, copt);
            if (mf.wr_first) {
                const auto tf = select_endpoints(treated, keep_f);
                const auto cf = select_endpoints(controls, keep_f);
                per_rep[r].f = count_wins_losses(tf, cf, rot_single, specs_f, copt);
            }
            if (mf.wr_last) {
                const auto tl = select_endpoints(treated, keep_l);
                const auto cl = select_endpoints(controls, keep_l);
                per_rep[r].l = count_wins_losses(tl, cl, rot_single, specs_l, copt);
            }
        });
        for (const auto& c : per_rep) {
            pool.absorb(c.rwr);
            if (mf.wr_first) pool_f.absorb(c.f);
            if (mf.wr_last) pool_l.absorb(c.l);
        }
        ref_rwr = pool.wins / pool.losses;
        ref_rnb = (pool.wins - pool.losses) / pool.pairs_scaled;
        const double ties = pool.pairs_scaled - pool.wins - pool.losses;
        ref_rwo = (pool.wins + 0.5 * ties) / (pool.losses + 0.5 * ties);
        if (mf.wr_first) ref_f = pool_f.wins / pool_f.losses;
        if (mf.wr_last) ref_l = pool_l.wins / pool_l.losses;
    }

    CellAccumulator acc;
    acc.slots.push_back({"rwr", track_coverage});
    acc.references.push_back(ref_rwr);
    if (mf.rnb) {
        acc.slots.push_back({"rnb", track_coverage});
        acc.references.push_back(ref_rnb);
    }
    if (mf.rwo) {
        acc.slots.push_back({"rwo", track_coverage});
        acc.references.push_back(ref_rwo);
    }
    if (mf.wr_first) {
        acc.slots.push_back({"wr_f", track_coverage});
        acc.references.push_back(ref_f);
    }
    if (mf.wr_last) {
        acc.slots.push_back({"wr_l", track_coverage});
        acc.references.push_back(ref_l);
    }
    if (mf.logrank) {
        acc.slots.push_back({"logrank", false});
        acc.references.push_back(kNaN);
    }
    acc.records.assign(acc.slots.size(), std::vector<RepRecord>(static_cast<std::size_t>(R)));
    acc.replicate_ok.assign(static_cast<std::size_t>(R), 0);

    parallel_for(static_cast<std::size_t>(R), config.threads, [&](std::size_t r) {
        try {
            const auto data =
                generate_frailty_dataset(scenario, derive_stream(cell_key, 1000000 + r));
            std::vector<Subject> treated, controls;
            split_arms(data, treated, controls);
            const WinStatInference inf = analyze_dataset(treated, controls, rot_rwr, specs,
                                                         config.alpha, mf.rnb || mf.rwo, false);
            int slot = 0;
            auto put = [&](const InferenceResult& res, double reference) {
                RepRecord rec;
                rec.valid = 1;
                rec.reject = res.p_value < config.alpha ? 1 : 0;
                rec.cover = ci_covers(res, reference) ? 1 : 0;
                rec.estimate = res.estimate;
                acc.records[static_cast<std::size_t>(slot)][r] = rec;
                ++slot;
            };
            put(inf.rwr, ref_rwr);
            if (mf.rnb) put(inf.nbwo.rnb, ref_rnb);
            if (mf.rwo) put(inf.nbwo.rwo, ref_rwo);
            if (mf.wr_first) {
                const auto tf = select_endpoints(treated, keep_f);
                const auto cf = select_endpoints(controls, keep_f);
                const WinStatInference wf =
                    analyze_dataset(tf, cf, rot_single, specs_f, config.alpha, false, false);
                put(wf.rwr, ref_f);
            }
            if (mf.wr_last) {
                const auto tl = select_endpoints(treated, keep_l);
                const auto cl = select_endpoints(controls, keep_l);
                const WinStatInference wl =
                    analyze_dataset(tl, cl, rot_single, specs_l, config.alpha, false, false);
                put(wl.rwr, ref_l);
            }
            if (mf.logrank) {
                const LogrankResult lr = composite_logrank(data, specs);
                RepRecord rec;
                rec.valid = 1;
                rec.reject = lr.p_value < config.alpha ? 1 : 0;
                rec.estimate = lr.statistic;
                acc.records[static_cast<std::size_t>(slot)][r] = rec;
            }
            acc.replicate_ok[r] = 1;
        } catch (const std::exception&) {
        }
    });

    CellResult cell;
    cell.key = key;
    cell.null_cell = null_cell;
    cell.reference_source = null_cell ? "exact_null" : "plug_in_pooled";
    cell.replicates_requested = R;
    summarise_cell(config, acc, cell_key, cell);
    return cell;
}

} // namespace

StudyResult run_study(const StudyConfig& config) {
    if (config.replicates < 1) throw ConfigError("study requires at least one replicate");

    StudyResult result;
    result.replicates = config.replicates;
    result.alpha = config.alpha;
    result.seed = config.seed;
    result.reference_multiplier = config.reference_multiplier;

    std::size_t cell_index = 0;
    if (std::holds_alternative<CopulaStudyGrid>(config.grid)) {
        const auto& grid = std::get<CopulaStudyGrid>(config.grid);
        result.scenario_family = "copula";
        if (grid.study_days.empty()) throw ConfigError("copula study: empty study_days grid");
        std::vector<std::array<double, 3>> configs = grid.alpha_nonfatal_configs;
        if (configs.empty()) configs.push_back(grid.base.alpha_nonfatal);
        for (const double days : grid.study_days)
            for (const auto& ah : configs) {
                CopulaScenario scenario = grid.base;
                scenario.study_days = days;
                scenario.alpha_nonfatal = ah;
                scenario.validate();
                CellKey key;
                key.scenario = "copula";
                key.study_days = days;
                key.alpha_nonfatal = ah;
                key.alpha_death = scenario.alpha_death;
                result.cells.push_back(run_copula_cell(
                    config, scenario, key, derive_stream(config.seed, ++cell_index)));
            }
    } else {
        const auto& grid = std::get<FrailtyStudyGrid>(config.grid);
        result.scenario_family = "frailty";
        if (grid.alpha_death.empty() || grid.j_values.empty() || grid.effects.empty())
            throw ConfigError("frailty study: empty grid");
        for (const double ad : grid.alpha_death)
            for (const int j : grid.j_values)
                for (const GapEffect effect : grid.effects) {
                    FrailtyScenario scenario = grid.base;
                    scenario.alpha_death = ad;
                    scenario.max_recurrences = j;
                    scenario.alpha_gap.assign(static_cast<std::size_t>(j), 0.0);
                    if (effect == GapEffect::Homogeneous)
                        std::fill(scenario.alpha_gap.begin(), scenario.alpha_gap.end(), ad);
                    else
                        scenario.alpha_gap[0] = ad;
                    scenario.validate();
                    CellKey key;
                    key.scenario = "frailty";
                    key.study_days = scenario.study_days;
                    key.alpha_death = ad;
                    key.j = j;
                    key.effect = effect == GapEffect::Homogeneous ? "homogeneous" : "heterogeneous";
                    result.cells.push_back(run_frailty_cell(
                        config, scenario, key, derive_stream(config.seed, ++cell_index)));
                }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

void emit_results(const StudyResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    const fs::path csv_path = fs::path(out_dir) / "results.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write " + csv_path.string());

    csv << "scenario,study_days,alpha_h1,alpha_h2,alpha_h3,alpha_d,j,effect,"
           "method,metric,value,mc_se\n";
    for (const auto& cell : result.cells) {
        const auto& k = cell.key;
        const std::string prefix = k.scenario + "," + format_g(k.study_days) + "," +
                                   format_g(k.alpha_nonfatal[0]) + "," +
                                   format_g(k.alpha_nonfatal[1]) + "," +
                                   format_g(k.alpha_nonfatal[2]) + "," + format_g(k.alpha_death) +
                                   "," + std::to_string(k.j) + "," + k.effect + ",";
        for (const auto& m : cell.methods) {
            csv << prefix << m.method << ",rejection_rate," << format_g(m.rejection_rate) << ","
                << format_g(m.rejection_se) << "\n";
            if (m.coverage_tracked)
                csv << prefix << m.method << ",coverage," << format_g(m.coverage) << ","
                    << format_g(m.coverage_se) << "\n";
            csv << prefix << m.method << ",mean_estimate," << format_g(m.mean_estimate) << ","
                << format_g(m.estimate_se) << "\n";
        }
    }
    csv.close();

    nlohmann::ordered_json manifest;
    manifest["format"] = "rotwin-study-manifest";
    manifest["schema_version"] = 1;
    manifest["scenario_family"] = result.scenario_family;
    manifest["replicates"] = result.replicates;
    manifest["alpha"] = result.alpha;
    manifest["seed"] = result.seed;
    manifest["reference_multiplier"] = result.reference_multiplier;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& cell : result.cells) {
        nlohmann::ordered_json c;
        c["label"] = cell.key.label();
        c["null_cell"] = cell.null_cell;
        c["reference_source"] = cell.reference_source;
        c["replicates_used"] = cell.replicates_used;
        c["failures"] = cell.failures;
        nlohmann::ordered_json refs;
        for (const auto& m : cell.methods)
            if (m.coverage_tracked) refs[m.method] = m.reference;
        c["references"] = refs;
        c["notes"] = cell.notes;
        cells.push_back(c);
    }
    manifest["cells"] = cells;

    const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
    std::ofstream mj(manifest_path);
    if (!mj) throw IoError("cannot write " + manifest_path.string());
    mj << manifest.dump(2) << "\n";
}

} // namespace rotwin
