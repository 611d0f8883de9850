#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rotwin/endpoint.hpp"
#include "rotwin/hierarchy.hpp"

namespace rotwin {

// Tri-state result of one comparison. Encoded in two bits throughout.
enum class Comparison : std::uint8_t { Tie = 0, AWins = 1, BWins = 2 };

inline constexpr std::uint8_t kTie = 0;
inline constexpr std::uint8_t kWin = 1;  // treated subject wins
inline constexpr std::uint8_t kLoss = 2; // treated subject loses

// Winning-function primitive for a single endpoint. Censored time-to-event
// comparisons are determinate only when one side's event is known to precede
// the other side's observed time by more than the margin; everything else,
// including equality within the margin, is a tie.
Comparison compare_endpoint(const Outcome& a, const Outcome& b, const EndpointSpec& spec);

struct PairDecision {
    Comparison result = Comparison::Tie;
    int position = -1; // 0-based position in the order of the deciding endpoint
};

// Walks the endpoints of `order` and returns the first determinate result.
PairDecision compare_pair(const Subject& treated, const Subject& control,
                          std::span<const int> order, std::span<const EndpointSpec> specs);

// Win/loss/tie counts per rotation, with deciding-endpoint attribution by
// position and residual tie counts after each position.
struct WinCounts {
    int p = 0; // rotations
    int q = 0; // endpoints
    std::int64_t n_treated = 0;
    std::int64_t n_controls = 0;

    std::vector<std::int64_t> wins;   // [p]
    std::vector<std::int64_t> losses; // [p]
    std::vector<std::int64_t> ties;   // [p], pairs indeterminate at every endpoint

    // [p][q]: wins/losses decided at position i; pairs still tied after position i.
    std::vector<std::vector<std::int64_t>> wins_at;
    std::vector<std::vector<std::int64_t>> losses_at;
    std::vector<std::vector<std::int64_t>> residual_ties_at;

    std::int64_t pair_total() const { return n_treated * n_controls; }
};

struct CompareOptions {
    // Above this many treated x control pairs the per-pair result table is
    // not materialized; covariance accumulation recomputes rows on the fly.
    std::int64_t table_threshold_pairs = 16'000'000;
    int threads = 0; // 0 = hardware concurrency
};

// Packed per-pair, per-rotation tri-states: 2 bits per pair per rotation.
class PairTable {
public:
    PairTable() = default;
    PairTable(int p, std::size_t nt, std::size_t nc);

    void set_row(int k, std::size_t i, std::span<const std::uint8_t> codes);
    std::uint8_t get(int k, std::size_t i, std::size_t j) const {
        const std::uint64_t w = words_[word_index(k, i, j)];
        return static_cast<std::uint8_t>((w >> (2 * (j & 31))) & 3u);
    }
    void unpack_row(int k, std::size_t i, std::span<std::uint8_t> out) const;

private:
    std::size_t word_index(int k, std::size_t i, std::size_t j) const {
        return (static_cast<std::size_t>(k) * nt_ + i) * words_per_row_ + (j >> 5);
    }
    std::size_t nt_ = 0, nc_ = 0, words_per_row_ = 0;
    int p_ = 0;
    std::vector<std::uint64_t> words_;
};

// Executes all pairwise comparisons across rotations in one parallel pass.
// Counts are accumulated in fixed (i, j) order per rotation; the merged
// result is identical for any worker count. Inputs are borrowed and must
// outlive the analysis.
class PairwiseAnalysis {
public:
    PairwiseAnalysis(std::span<const Subject> treated, std::span<const Subject> controls,
                     const RotationSet& rotations, std::span<const EndpointSpec> specs,
                     CompareOptions options = {});

    const WinCounts& counts() const { return counts_; }
    int rotation_count() const { return p_; }
    std::size_t n_treated() const { return nt_; }
    std::size_t n_controls() const { return nc_; }
    bool table_cached() const { return table_.has_value(); }

    // Tri-state codes for treated row i, laid out k*n_controls + j.
    // Served from the cached table, or recomputed when streaming.
    void row_codes(std::size_t i, std::span<std::uint8_t> out) const;

private:
    void compute_row(std::size_t i, std::span<std::uint8_t> out) const;

    struct EndpointColumns {
        EndpointKind kind;
        Direction direction;
        double margin;
        std::vector<double> t_time, c_time;     // time-to-event / continuous
        std::vector<std::uint8_t> t_event, c_event;
        std::vector<long long> t_count, c_count;
    };

    std::uint8_t compare_one(int endpoint, std::size_t i, std::size_t j) const;

    std::size_t nt_ = 0, nc_ = 0;
    int p_ = 0, q_ = 0;
    const RotationSet* rotations_ = nullptr;
    std::vector<EndpointColumns> columns_;
    WinCounts counts_;
    std::optional<PairTable> table_;
};

// Convenience wrapper when only the counts are needed.
WinCounts count_wins_losses(std::span<const Subject> treated, std::span<const Subject> controls,
                            const RotationSet& rotations, std::span<const EndpointSpec> specs,
                            CompareOptions options = {});

// Block-level decomposition: win/tie/loss percentages aggregated across
// rotations and block positions, plus the block-level win ratio.
struct DecompositionRow {
    std::string label;
    double win_count = 0.0;  // weighted when stratified
    double loss_count = 0.0;
    double win_pct = 0.0;    // of all p * Nt * Nc comparisons
    double tie_pct = 0.0;    // residual ties after the block, rotation 1
    double loss_pct = 0.0;
    std::optional<double> win_ratio; // empty when the block has zero losses
};

struct Decomposition {
    std::vector<DecompositionRow> rows;
    double pair_total = 0.0; // Nt*Nc, weighted when stratified
    int p = 0;
};

Decomposition decompose(const WinCounts& counts, const Hierarchy& hierarchy,
                        std::span<const EndpointSpec> specs);

// Stratified variant: counts aggregated as sum_s w_s * n^{(s)} before the
// same percentage and ratio arithmetic.
Decomposition decompose_stratified(std::span<const WinCounts> counts,
                                   std::span<const double> weights,
                                   const Hierarchy& hierarchy,
                                   std::span<const EndpointSpec> specs);

} // namespace rotwin
