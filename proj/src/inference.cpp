#include "rotwin/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "rotwin/errors.hpp"
#include "rotwin/normal.hpp"
#include "rotwin/parallel.hpp"
#include "rotwin/rng.hpp"

namespace rotwin {

ThetaVector estimate_theta(const WinCounts& counts) {
    const double pairs = static_cast<double>(counts.pair_total());
    ThetaVector th;
    th.p = counts.p;
    th.t.resize(static_cast<std::size_t>(counts.p));
    th.c.resize(static_cast<std::size_t>(counts.p));
    for (int k = 0; k < counts.p; ++k) {
        th.t[static_cast<std::size_t>(k)] = static_cast<double>(counts.wins[static_cast<std::size_t>(k)]) / pairs;
        th.c[static_cast<std::size_t>(k)] = static_cast<double>(counts.losses[static_cast<std::size_t>(k)]) / pairs;
    }
    return th;
}

ThetaVector null_centering(const ThetaVector& theta) {
    ThetaVector th;
    th.p = theta.p;
    th.t.resize(theta.t.size());
    th.c.resize(theta.c.size());
    for (std::size_t k = 0; k < theta.t.size(); ++k)
        th.t[k] = th.c[k] = 0.5 * (theta.t[k] + theta.c[k]);
    return th;
}

// ---------------------------------------------------------------------------
// PairJointStats
// ---------------------------------------------------------------------------

PairJointStats PairJointStats::build_from_rows(
    int p, std::size_t nt, std::size_t nc,
    const std::function<void(std::size_t, std::span<std::uint8_t>)>& row_fn, int threads) {
    PairJointStats s;
    s.p = p;
    s.nt = nt;
    s.nc = nc;
    const std::size_t npairs = static_cast<std::size_t>(p) * (p - 1) / 2;
    auto zero_rows = [&](std::size_t n) {
        return std::vector<std::vector<std::int32_t>>(static_cast<std::size_t>(p),
                                                      std::vector<std::int32_t>(n, 0));
    };
    s.row_w = zero_rows(nt);
    s.row_l = zero_rows(nt);
    s.col_w = zero_rows(nc);
    s.col_l = zero_rows(nc);
    s.joint_row.resize(npairs);
    s.joint_col.resize(npairs);
    for (std::size_t pi = 0; pi < npairs; ++pi)
        for (int cb = 0; cb < 4; ++cb) {
            s.joint_row[pi][static_cast<std::size_t>(cb)].assign(nt, 0);
            s.joint_col[pi][static_cast<std::size_t>(cb)].assign(nc, 0);
        }

    struct ColBuffer {
        std::vector<std::vector<std::int32_t>> w, l;
        std::vector<std::array<std::vector<std::int32_t>, 4>> joint;
    };

    const int nthreads =
        std::max(1, std::min<int>(effective_threads(threads), static_cast<int>(nt)));
    std::vector<ColBuffer> buffers(static_cast<std::size_t>(nthreads));
    std::vector<std::thread> pool;
    const std::size_t chunk = (nt + static_cast<std::size_t>(nthreads) - 1) /
                              static_cast<std::size_t>(nthreads);

    auto work = [&](int tid, std::size_t lo, std::size_t hi) {
        ColBuffer& buf = buffers[static_cast<std::size_t>(tid)];
        buf.w.assign(static_cast<std::size_t>(p), std::vector<std::int32_t>(nc, 0));
        buf.l.assign(static_cast<std::size_t>(p), std::vector<std::int32_t>(nc, 0));
        buf.joint.resize(npairs);
        for (std::size_t pi = 0; pi < npairs; ++pi)
            for (int cb = 0; cb < 4; ++cb)
                buf.joint[pi][static_cast<std::size_t>(cb)].assign(nc, 0);

        std::vector<std::uint8_t> codes(static_cast<std::size_t>(p) * nc);
        for (std::size_t i = lo; i < hi; ++i) {
            row_fn(i, codes);
            for (std::size_t j = 0; j < nc; ++j) {
                for (int k = 0; k < p; ++k) {
                    const std::uint8_t c = codes[static_cast<std::size_t>(k) * nc + j];
                    if (c == kWin) {
                        ++s.row_w[static_cast<std::size_t>(k)][i];
                        ++buf.w[static_cast<std::size_t>(k)][j];
                    } else if (c == kLoss) {
                        ++s.row_l[static_cast<std::size_t>(k)][i];
                        ++buf.l[static_cast<std::size_t>(k)][j];
                    }
                }
                for (int k1 = 0; k1 < p; ++k1) {
                    const std::uint8_t c1 = codes[static_cast<std::size_t>(k1) * nc + j];
                    if (c1 == kTie) continue;
                    for (int k2 = k1 + 1; k2 < p; ++k2) {
                        const std::uint8_t c2 = codes[static_cast<std::size_t>(k2) * nc + j];
                        if (c2 == kTie) continue;
                        const std::size_t pi = s.pair_index(k1, k2);
                        const std::size_t combo =
                            static_cast<std::size_t>((c1 - 1) * 2 + (c2 - 1));
                        ++s.joint_row[pi][combo][i];
                        ++buf.joint[pi][combo][j];
                    }
                }
            }
        }
    };

    if (nthreads == 1) {
        work(0, 0, nt);
    } else {
        for (int t = 0; t < nthreads; ++t) {
            const std::size_t lo = static_cast<std::size_t>(t) * chunk;
            const std::size_t hi = std::min(nt, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(work, t, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // Integer merges: identical result for any thread count or order.
    for (const auto& buf : buffers) {
        if (buf.w.empty()) continue;
        for (int k = 0; k < p; ++k)
            for (std::size_t j = 0; j < nc; ++j) {
                s.col_w[static_cast<std::size_t>(k)][j] += buf.w[static_cast<std::size_t>(k)][j];
                s.col_l[static_cast<std::size_t>(k)][j] += buf.l[static_cast<std::size_t>(k)][j];
            }
        for (std::size_t pi = 0; pi < npairs; ++pi)
            for (int cb = 0; cb < 4; ++cb)
                for (std::size_t j = 0; j < nc; ++j)
                    s.joint_col[pi][static_cast<std::size_t>(cb)][j] +=
                        buf.joint[pi][static_cast<std::size_t>(cb)][j];
    }
    return s;
}

PairJointStats PairJointStats::build(const PairwiseAnalysis& analysis, int threads) {
    return build_from_rows(analysis.rotation_count(), analysis.n_treated(),
                           analysis.n_controls(),
                           [&analysis](std::size_t i, std::span<std::uint8_t> out) {
                               analysis.row_codes(i, out);
                           },
                           threads);
}

// ---------------------------------------------------------------------------
// Covariance assembly
// ---------------------------------------------------------------------------

namespace {

struct Kahan {
    double sum = 0.0, carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

inline std::size_t combo_of(int d1, int d2) { // 0 = win side, 1 = loss side
    return static_cast<std::size_t>(d1 * 2 + d2);
}

} // namespace

CovarianceMatrix covariance_matrix(const PairJointStats& stats, const ThetaVector& centering) {
    if (stats.nt < 2 || stats.nc < 2)
        throw AnalysisError("insufficient subjects for variance estimation (need at least 2 per arm)");
    const int p = stats.p;
    const double nt = static_cast<double>(stats.nt);
    const double nc = static_cast<double>(stats.nc);

    CovarianceMatrix cov;
    cov.p = p;
    cov.m.assign(static_cast<std::size_t>(4) * p * p, 0.0);

    auto theta_of = [&](int d, int k) {
        return d == 0 ? centering.t[static_cast<std::size_t>(k)]
                      : centering.c[static_cast<std::size_t>(k)];
    };
    auto rows_of = [&](int d, int k) -> const std::vector<std::int32_t>& {
        return d == 0 ? stats.row_w[static_cast<std::size_t>(k)]
                      : stats.row_l[static_cast<std::size_t>(k)];
    };
    auto cols_of = [&](int d, int k) -> const std::vector<std::int32_t>& {
        return d == 0 ? stats.col_w[static_cast<std::size_t>(k)]
                      : stats.col_l[static_cast<std::size_t>(k)];
    };

    for (int a = 0; a < 2 * p; ++a) {
        const int d1 = a < p ? 0 : 1;
        const int k1 = a % p;
        for (int b = a; b < 2 * p; ++b) {
            const int d2 = b < p ? 0 : 1;
            const int k2 = b % p;
            const double th1 = theta_of(d1, k1);
            const double th2 = theta_of(d2, k2);
            const auto& r1 = rows_of(d1, k1);
            const auto& r2 = rows_of(d2, k2);
            const auto& c1 = cols_of(d1, k1);
            const auto& c2 = cols_of(d2, k2);

            const std::vector<std::int32_t>* jr = nullptr;
            const std::vector<std::int32_t>* jc = nullptr;
            bool same_rotation = (k1 == k2);
            bool same_side = (d1 == d2);
            if (!same_rotation) {
                const bool ordered = k1 < k2;
                const std::size_t pi =
                    ordered ? stats.pair_index(k1, k2) : stats.pair_index(k2, k1);
                const std::size_t cb = ordered ? combo_of(d1, d2) : combo_of(d2, d1);
                jr = &stats.joint_row[pi][cb];
                jc = &stats.joint_col[pi][cb];
            }

            // sum_j<j'> [F1 - th1][F2 - th2] over shared treated subject i:
            //   (row sum centered F1)(row sum centered F2) - sum_j (centered)(centered)
            Kahan row_acc;
            for (std::size_t i = 0; i < stats.nt; ++i) {
                const double R1 = static_cast<double>(r1[i]);
                const double R2 = static_cast<double>(r2[i]);
                double joint;
                if (same_rotation)
                    joint = same_side ? R1 : 0.0;
                else
                    joint = static_cast<double>((*jr)[i]);
                const double cross = joint - th1 * R2 - th2 * R1 + nc * th1 * th2;
                row_acc.add((R1 - nc * th1) * (R2 - nc * th2) - cross);
            }
            Kahan col_acc;
            for (std::size_t j = 0; j < stats.nc; ++j) {
                const double C1 = static_cast<double>(c1[j]);
                const double C2 = static_cast<double>(c2[j]);
                double joint;
                if (same_rotation)
                    joint = same_side ? C1 : 0.0;
                else
                    joint = static_cast<double>((*jc)[j]);
                const double cross = joint - th1 * C2 - th2 * C1 + nt * th1 * th2;
                col_acc.add((C1 - nt * th1) * (C2 - nt * th2) - cross);
            }

            const double sigma1 = nt * nc / (nc - 1.0) * row_acc.sum;
            const double sigma2 = nt * nc / (nt - 1.0) * col_acc.sum;
            const double value = sigma1 / nt + sigma2 / nc;
            cov.at(a, b) = value;
            cov.at(b, a) = value;
        }
    }
    return cov;
}

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

namespace {

struct Gram {
    double v11 = 0.0, v22 = 0.0, v12 = 0.0;
};

// G Sigma G^T for G aggregating the t block and the c block.
Gram aggregate(const CovarianceMatrix& cov) {
    Gram g;
    const int p = cov.p;
    for (int k1 = 0; k1 < p; ++k1)
        for (int k2 = 0; k2 < p; ++k2) {
            g.v11 += cov.at(k1, k2);
            g.v22 += cov.at(p + k1, p + k2);
            g.v12 += cov.at(k1, p + k2);
        }
    return g;
}

struct AggregatedCounts {
    double wins = 0.0, losses = 0.0, pairs_scaled = 0.0; // pairs_scaled = p*Nt*Nc
};

AggregatedCounts totals(const WinCounts& counts) {
    AggregatedCounts t;
    for (int k = 0; k < counts.p; ++k) {
        t.wins += static_cast<double>(counts.wins[static_cast<std::size_t>(k)]);
        t.losses += static_cast<double>(counts.losses[static_cast<std::size_t>(k)]);
    }
    t.pairs_scaled = static_cast<double>(counts.p) * static_cast<double>(counts.pair_total());
    return t;
}

InferenceResult make_rwr(double wins, double losses, const Gram& v, const Gram& v0,
                         double alpha, bool stratified) {
    if (losses <= 0.0) throw AnalysisError("degenerate: no losses");
    if (wins <= 0.0) throw AnalysisError("degenerate: no wins");

    InferenceResult r;
    r.measure = Measure::RWR;
    r.log_scale = true;
    r.alpha = alpha;
    r.stratified = stratified;
    r.estimate = wins / losses;
    r.variance = v.v11 / (wins * wins) + v.v22 / (losses * losses) - 2.0 * v.v12 / (wins * losses);
    if (!(r.variance > 0.0))
        throw AnalysisError("nonpositive log-scale variance; data numerically degenerate");
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double log_est = std::log(r.estimate);
    const double half = z * std::sqrt(r.variance);
    r.ci_lower = std::exp(log_est - half);
    r.ci_upper = std::exp(log_est + half);

    const double mean0 = 0.5 * (wins + losses);
    const double var0 = (v0.v11 + v0.v22 - 2.0 * v0.v12) / (mean0 * mean0);
    if (!(var0 > 0.0)) throw AnalysisError("degenerate null variance");
    r.p_value = two_sided_p(log_est / std::sqrt(var0));
    return r;
}

RnbRwoResults make_rnb_rwo(double wins, double losses, double pairs_scaled, const Gram& v,
                           const Gram& v0, double alpha, bool stratified) {
    const double quad = v.v11 + v.v22 - 2.0 * v.v12;
    const double quad0 = v0.v11 + v0.v22 - 2.0 * v0.v12;
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double ties = pairs_scaled - wins - losses;

    InferenceResult rnb;
    rnb.measure = Measure::RNB;
    rnb.log_scale = false;
    rnb.alpha = alpha;
    rnb.stratified = stratified;
    rnb.estimate = (wins - losses) / pairs_scaled;
    rnb.variance = quad / (pairs_scaled * pairs_scaled);
    if (rnb.variance > 0.0 && quad0 > 0.0) {
        const double half = z * std::sqrt(rnb.variance);
        rnb.ci_lower = rnb.estimate - half;
        rnb.ci_upper = rnb.estimate + half;
        rnb.p_value = two_sided_p(rnb.estimate / std::sqrt(quad0 / (pairs_scaled * pairs_scaled)));
    } else {
        rnb.degenerate = true;
        rnb.note = "degenerate: zero variance";
        rnb.ci_lower = rnb.ci_upper = rnb.estimate;
        rnb.p_value = 1.0;
    }

    InferenceResult rwo;
    rwo.measure = Measure::RWO;
    rwo.log_scale = true;
    rwo.alpha = alpha;
    rwo.stratified = stratified;
    const double numer = wins + 0.5 * ties;
    const double denom = losses + 0.5 * ties;
    if (denom <= 0.0) {
        rwo.estimate = std::numeric_limits<double>::infinity();
        rwo.degenerate = true;
        rwo.note = "degenerate: no losses or ties";
        rwo.ci_lower = rwo.ci_upper = rwo.estimate;
        rwo.p_value = 1.0;
        return {rnb, rwo};
    }
    rwo.estimate = numer / denom;
    const double eta = numer; // plug-in identity: nu_1 equals the win total
    const double scale = 1.0 / eta + 1.0 / (pairs_scaled - eta);
    rwo.variance = quad * scale * scale / 4.0;
    if (rwo.variance > 0.0 && quad0 > 0.0 && rwo.estimate > 0.0) {
        const double half = z * std::sqrt(rwo.variance);
        rwo.ci_lower = rwo.estimate * std::exp(-half);
        rwo.ci_upper = rwo.estimate * std::exp(half);
        // Under the null eta is pairs_scaled/2, so the delta factor is 4/P^2.
        const double var0 = quad0 * 4.0 / (pairs_scaled * pairs_scaled);
        rwo.p_value = two_sided_p(std::log(rwo.estimate) / std::sqrt(var0));
    } else {
        rwo.degenerate = true;
        rwo.note = "degenerate: zero variance";
        rwo.ci_lower = rwo.ci_upper = rwo.estimate;
        rwo.p_value = 1.0;
    }
    return {rnb, rwo};
}

} // namespace

double rwr_estimate(const WinCounts& counts) {
    const auto t = totals(counts);
    if (t.losses <= 0.0) {
        if (t.wins <= 0.0) return std::numeric_limits<double>::quiet_NaN();
        return std::numeric_limits<double>::infinity();
    }
    return t.wins / t.losses;
}

InferenceResult rwr_inference(const WinCounts& counts, const CovarianceMatrix& cov,
                              const CovarianceMatrix& null_cov, double alpha) {
    const auto t = totals(counts);
    return make_rwr(t.wins, t.losses, aggregate(cov), aggregate(null_cov), alpha, false);
}

double rwr_test_pvalue(const WinCounts& counts, const CovarianceMatrix& null_cov) {
    const auto t = totals(counts);
    if (t.losses <= 0.0 || t.wins <= 0.0) throw AnalysisError("degenerate: no wins or no losses");
    const Gram v0 = aggregate(null_cov);
    const double mean0 = 0.5 * (t.wins + t.losses);
    const double var0 = (v0.v11 + v0.v22 - 2.0 * v0.v12) / (mean0 * mean0);
    if (!(var0 > 0.0)) throw AnalysisError("degenerate null variance");
    return two_sided_p(std::log(t.wins / t.losses) / std::sqrt(var0));
}

double rwr_test(const PairJointStats& stats, const WinCounts& counts) {
    const ThetaVector theta0 = null_centering(estimate_theta(counts));
    return rwr_test_pvalue(counts, covariance_matrix(stats, theta0));
}

RnbRwoResults rnb_rwo_inference(const WinCounts& counts, const CovarianceMatrix& cov,
                                const CovarianceMatrix& null_cov, double alpha) {
    const auto t = totals(counts);
    return make_rnb_rwo(t.wins, t.losses, t.pairs_scaled, aggregate(cov), aggregate(null_cov),
                        alpha, false);
}

InferenceResult single_rotation_inference(const WinCounts& counts, const CovarianceMatrix& cov,
                                          const CovarianceMatrix& null_cov, int k, double alpha) {
    const int p = counts.p;
    const double wins = static_cast<double>(counts.wins[static_cast<std::size_t>(k)]);
    const double losses = static_cast<double>(counts.losses[static_cast<std::size_t>(k)]);
    Gram v{cov.at(k, k), cov.at(p + k, p + k), cov.at(k, p + k)};
    Gram v0{null_cov.at(k, k), null_cov.at(p + k, p + k), null_cov.at(k, p + k)};
    return make_rwr(wins, losses, v, v0, alpha, false);
}

// ---------------------------------------------------------------------------
// Stratified
// ---------------------------------------------------------------------------

StratifiedResults stratified_inference(std::span<const StratumInput> strata, double alpha) {
    if (strata.empty()) throw ConfigError("stratified analysis requires at least one stratum");
    const int p = strata[0].counts.p;

    double wins = 0.0, losses = 0.0, pairs_scaled = 0.0;
    Gram v, v0;
    for (const auto& s : strata) {
        if (s.weight <= 0.0)
            throw ConfigError("stratum '" + s.key + "' has nonpositive weight");
        if (s.counts.n_treated < 2 || s.counts.n_controls < 2)
            throw AnalysisError("stratum '" + s.key +
                                "' has fewer than 2 subjects in an arm; exclude it or merge strata");
        if (s.counts.p != p) throw ConfigError("stratified analysis: rotation count mismatch");
        const double w = s.weight;
        const double w2 = w * w;
        for (int k = 0; k < p; ++k) {
            wins += w * static_cast<double>(s.counts.wins[static_cast<std::size_t>(k)]);
            losses += w * static_cast<double>(s.counts.losses[static_cast<std::size_t>(k)]);
        }
        pairs_scaled += w * static_cast<double>(p) * static_cast<double>(s.counts.pair_total());
        const Gram gs = aggregate(s.cov);
        const Gram gs0 = aggregate(s.null_cov);
        v.v11 += w2 * gs.v11;
        v.v22 += w2 * gs.v22;
        v.v12 += w2 * gs.v12;
        v0.v11 += w2 * gs0.v11;
        v0.v22 += w2 * gs0.v22;
        v0.v12 += w2 * gs0.v12;
    }

    StratifiedResults out;
    out.rwr = make_rwr(wins, losses, v, v0, alpha, true);
    auto both = make_rnb_rwo(wins, losses, pairs_scaled, v, v0, alpha, true);
    out.rnb = both.rnb;
    out.rwo = both.rwo;
    return out;
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

namespace {

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

} // namespace

BootstrapResult bootstrap_ci(std::span<const Subject> subjects, const Hierarchy& hierarchy,
                             std::span<const EndpointSpec> specs, const BootstrapOptions& options,
                             bool stratified, const std::map<std::string, double>* stratum_weights) {
    if (options.replicates < 100)
        throw ConfigError("bootstrap requires at least 100 replicates");

    const RotationSet rotations = build_rotation_set(hierarchy, options.rotation_cap);
    const int p = rotations.rotation_count();

    // Group indices by stratum (single pooled stratum when not stratified).
    std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const std::string key = stratified ? subjects[i].stratum : std::string("all");
        auto& g = groups[key];
        (subjects[i].arm == Arm::Treatment ? g.first : g.second).push_back(i);
    }
    for (const auto& [key, g] : groups)
        if (g.first.empty() || g.second.empty())
            throw AnalysisError("stratum '" + key + "' lacks subjects in one arm");

    auto weight_of = [&](const std::string& key) {
        if (!stratum_weights) return 1.0;
        const auto it = stratum_weights->find(key);
        return it == stratum_weights->end() ? 1.0 : it->second;
    };

    const int B = options.replicates;
    std::vector<double> rwr_v(static_cast<std::size_t>(B)), rnb_v(static_cast<std::size_t>(B)),
        rwo_v(static_cast<std::size_t>(B));
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(B), 0);

    CompareOptions copt;
    copt.table_threshold_pairs = 0; // streaming: resamples never need the table
    copt.threads = 1;

    parallel_for(static_cast<std::size_t>(B), options.threads, [&](std::size_t b) {
        Rng rng(options.seed, b + 1);
        double wins = 0.0, losses = 0.0, pairs_scaled = 0.0;
        for (const auto& [key, g] : groups) {
            const double w = weight_of(key);
            auto resample = [&](const std::vector<std::size_t>& pool) {
                std::vector<Subject> out;
                out.reserve(pool.size());
                for (std::size_t n = 0; n < pool.size(); ++n) {
                    const std::size_t pick = std::min(
                        pool.size() - 1,
                        static_cast<std::size_t>(rng.uniform01() * static_cast<double>(pool.size())));
                    out.push_back(subjects[pool[pick]]);
                }
                return out;
            };
            const std::vector<Subject> rt = resample(g.first);
            const std::vector<Subject> rc = resample(g.second);
            const WinCounts counts = count_wins_losses(rt, rc, rotations, specs, copt);
            for (int k = 0; k < p; ++k) {
                wins += w * static_cast<double>(counts.wins[static_cast<std::size_t>(k)]);
                losses += w * static_cast<double>(counts.losses[static_cast<std::size_t>(k)]);
            }
            pairs_scaled += w * static_cast<double>(p) * static_cast<double>(counts.pair_total());
        }
        if (losses <= 0.0) return; // degenerate resample: skipped and counted
        const double ties = pairs_scaled - wins - losses;
        rwr_v[b] = wins / losses;
        rnb_v[b] = (wins - losses) / pairs_scaled;
        rwo_v[b] = (wins + 0.5 * ties) / (losses + 0.5 * ties);
        ok[b] = 1;
    });

    BootstrapResult result;
    result.requested = B;
    std::vector<double> rwr_used, rnb_used, rwo_used;
    for (std::size_t b = 0; b < static_cast<std::size_t>(B); ++b) {
        if (!ok[b]) continue;
        rwr_used.push_back(rwr_v[b]);
        rnb_used.push_back(rnb_v[b]);
        rwo_used.push_back(rwo_v[b]);
    }
    result.used = static_cast<int>(rwr_used.size());
    result.skipped_degenerate = B - result.used;
    result.degenerate_warning = result.skipped_degenerate > B / 10;
    if (result.used == 0) throw AnalysisError("all bootstrap resamples were degenerate");

    const double lo = options.alpha / 2.0, hi = 1.0 - options.alpha / 2.0;
    result.rwr = {percentile(rwr_used, lo), percentile(rwr_used, hi)};
    result.rnb = {percentile(rnb_used, lo), percentile(rnb_used, hi)};
    result.rwo = {percentile(rwo_used, lo), percentile(rwo_used, hi)};
    return result;
}

} // namespace rotwin
