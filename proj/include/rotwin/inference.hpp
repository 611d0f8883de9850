#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rotwin/compare.hpp"
#include "rotwin/hierarchy.hpp"

namespace rotwin {

// Win/loss probabilities per rotation, layout (t-block, c-block) matching
// the covariance ordering.
struct ThetaVector {
    int p = 0;
    std::vector<double> t, c;
};

ThetaVector estimate_theta(const WinCounts& counts);

// theta_t0 = theta_c0 = (theta_t + theta_c)/2, the null-hypothesis centering.
ThetaVector null_centering(const ThetaVector& theta);

// Integer sufficient statistics for every covariance entry: per-function row
// and column sums plus joint win/loss counts for each rotation pair. Built in
// one pass over the pair results; any centering constants can then be applied
// analytically, which is what makes the null-variance recomputation cheap.
class PairJointStats {
public:
    static PairJointStats build(const PairwiseAnalysis& analysis, int threads = 0);

    // Test-friendly: rows served by a callback, layout k*nc + j.
    static PairJointStats build_from_rows(
        int p, std::size_t nt, std::size_t nc,
        const std::function<void(std::size_t, std::span<std::uint8_t>)>& row_fn,
        int threads = 0);

    int p = 0;
    std::size_t nt = 0, nc = 0;

    // row_w[k][i]: wins of treated i across controls under rotation k.
    std::vector<std::vector<std::int32_t>> row_w, row_l, col_w, col_l;
    // Joint counts for rotation pairs k1 < k2, combos (win,win) (win,loss)
    // (loss,win) (loss,loss) in that order.
    std::vector<std::array<std::vector<std::int32_t>, 4>> joint_row, joint_col;

    std::size_t pair_index(int k1, int k2) const { // requires k1 < k2
        return static_cast<std::size_t>(k1) * (2 * p - k1 - 1) / 2 +
               static_cast<std::size_t>(k2 - k1 - 1);
    }
};

// Symmetric 2p x 2p covariance of the count vector
// (n_t^(1..p), n_c^(1..p)); index k for wins, p+k for losses.
struct CovarianceMatrix {
    int p = 0;
    std::vector<double> m; // dense (2p)^2, row-major

    double at(int a, int b) const { return m[static_cast<std::size_t>(a) * 2 * p + b]; }
    double& at(int a, int b) { return m[static_cast<std::size_t>(a) * 2 * p + b]; }
};

// Assembles every entry via the row/column-sum identity, O(Nt + Nc) per
// entry on top of the one-pass statistics. Requires Nt >= 2 and Nc >= 2.
CovarianceMatrix covariance_matrix(const PairJointStats& stats, const ThetaVector& centering);

enum class Measure { RWR, RNB, RWO };

struct InferenceResult {
    Measure measure = Measure::RWR;
    double estimate = 0.0;
    double variance = 0.0; // log-scale for RWR/RWO, linear for RNB
    bool log_scale = true;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double p_value = 1.0;
    double alpha = 0.05;
    bool stratified = false;
    bool degenerate = false;
    std::string note;
};

// Ratio of aggregated wins to losses; +infinity when losses are zero.
double rwr_estimate(const WinCounts& counts);

// Wald CI on the log scale plus the null-centered two-sided test.
// Throws AnalysisError on degenerate counts or a nonpositive variance.
InferenceResult rwr_inference(const WinCounts& counts, const CovarianceMatrix& cov,
                              const CovarianceMatrix& null_cov, double alpha = 0.05);

double rwr_test_pvalue(const WinCounts& counts, const CovarianceMatrix& null_cov);

// Convenience form matching the one-shot call shape: builds the null
// centering internally from the same statistics.
double rwr_test(const PairJointStats& stats, const WinCounts& counts);

struct RnbRwoResults {
    InferenceResult rnb, rwo;
};

// Net benefit (linear CI) and win odds (log CI). All-tie and all-win inputs
// yield flagged degenerate results rather than exceptions.
RnbRwoResults rnb_rwo_inference(const WinCounts& counts, const CovarianceMatrix& cov,
                                const CovarianceMatrix& null_cov, double alpha = 0.05);

// Standard-WR inference for one rotation extracted from a multi-rotation
// analysis; numerically identical to running that order as a p=1 hierarchy.
InferenceResult single_rotation_inference(const WinCounts& counts, const CovarianceMatrix& cov,
                                          const CovarianceMatrix& null_cov, int k,
                                          double alpha = 0.05);

// ---------------------------------------------------------------------------
// Stratified analysis
// ---------------------------------------------------------------------------

struct StratumInput {
    std::string key;
    double weight = 1.0;
    WinCounts counts;
    CovarianceMatrix cov;
    CovarianceMatrix null_cov;
};

struct StratifiedResults {
    InferenceResult rwr, rnb, rwo;
};

// Weighted aggregation across strata with variance
// sum_s w_s^2 G Sigma_s G^T; reduces exactly to the unstratified path for
// a single stratum of weight 1.
StratifiedResults stratified_inference(std::span<const StratumInput> strata, double alpha = 0.05);

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

struct BootstrapOptions {
    int replicates = 1000; // must be >= 100
    std::uint64_t seed = 1;
    double alpha = 0.05;
    int threads = 0;
    std::int64_t rotation_cap = kDefaultRotationCap;
};

struct BootstrapInterval {
    double lower = 0.0, upper = 0.0;
};

struct BootstrapResult {
    BootstrapInterval rwr, rnb, rwo;
    int requested = 0;
    int used = 0;
    int skipped_degenerate = 0;
    bool degenerate_warning = false; // more than 10% of resamples skipped
};

// Percentile intervals from seeded within-arm (and within-stratum, when
// requested) resampling; reproducible for any worker count.
BootstrapResult bootstrap_ci(std::span<const Subject> subjects, const Hierarchy& hierarchy,
                             std::span<const EndpointSpec> specs, const BootstrapOptions& options,
                             bool stratified = false,
                             const std::map<std::string, double>* stratum_weights = nullptr);

} // namespace rotwin
