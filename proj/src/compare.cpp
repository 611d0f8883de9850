#include "rotwin/compare.hpp"

#include <algorithm>
#include <cmath>

#include "rotwin/errors.hpp"
#include "rotwin/parallel.hpp"

namespace rotwin {

namespace {

Comparison from_signed(double diff, double margin) {
    if (diff > margin) return Comparison::AWins;
    if (diff < -margin) return Comparison::BWins;
    return Comparison::Tie;
}

// Censored time-to-event rule. `favours_late` is true for LargerWins.
Comparison compare_tte(double time_a, bool event_a, double time_b, bool event_b,
                       double margin, bool favours_late) {
    if (favours_late) {
        // a wins iff b's event occurred and a is known to have lasted past it.
        if (event_b && time_a > time_b + margin) return Comparison::AWins;
        if (event_a && time_b > time_a + margin) return Comparison::BWins;
        return Comparison::Tie;
    }
    // Smaller is favorable: a wins iff a's own event is known to precede b.
    if (event_a && time_b > time_a + margin) return Comparison::AWins;
    if (event_b && time_a > time_b + margin) return Comparison::BWins;
    return Comparison::Tie;
}

} // namespace

Comparison compare_endpoint(const Outcome& a, const Outcome& b, const EndpointSpec& spec) {
    if (outcome_kind(a) != spec.kind || outcome_kind(b) != spec.kind)
        throw ConfigError("outcome kind does not match endpoint '" + spec.id + "'");

    switch (spec.kind) {
        case EndpointKind::TimeToEvent: {
            const auto& oa = std::get<TimeToEventOutcome>(a);
            const auto& ob = std::get<TimeToEventOutcome>(b);
            return compare_tte(oa.time, oa.event, ob.time, ob.event, spec.margin,
                               spec.direction == Direction::LargerWins);
        }
        case EndpointKind::EventCount: {
            const double diff = static_cast<double>(std::get<EventCountOutcome>(a).count -
                                                    std::get<EventCountOutcome>(b).count);
            return from_signed(spec.direction == Direction::LargerWins ? diff : -diff, spec.margin);
        }
        case EndpointKind::Continuous: {
            const double diff =
                std::get<ContinuousOutcome>(a).value - std::get<ContinuousOutcome>(b).value;
            return from_signed(spec.direction == Direction::LargerWins ? diff : -diff, spec.margin);
        }
    }
    return Comparison::Tie;
}

PairDecision compare_pair(const Subject& treated, const Subject& control,
                          std::span<const int> order, std::span<const EndpointSpec> specs) {
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const int e = order[pos];
        const Comparison c = compare_endpoint(treated.outcomes[static_cast<std::size_t>(e)],
                                              control.outcomes[static_cast<std::size_t>(e)],
                                              specs[static_cast<std::size_t>(e)]);
        if (c != Comparison::Tie) return {c, static_cast<int>(pos)};
    }
    return {Comparison::Tie, -1};
}

// ---------------------------------------------------------------------------
// PairTable
// ---------------------------------------------------------------------------

PairTable::PairTable(int p, std::size_t nt, std::size_t nc)
    : nt_(nt), nc_(nc), words_per_row_((nc + 31) / 32), p_(p),
      words_(static_cast<std::size_t>(p) * nt * ((nc + 31) / 32), 0) {}

void PairTable::set_row(int k, std::size_t i, std::span<const std::uint8_t> codes) {
    const std::size_t base = (static_cast<std::size_t>(k) * nt_ + i) * words_per_row_;
    for (std::size_t j = 0; j < nc_; ++j)
        words_[base + (j >> 5)] |= static_cast<std::uint64_t>(codes[j] & 3u) << (2 * (j & 31));
}

void PairTable::unpack_row(int k, std::size_t i, std::span<std::uint8_t> out) const {
    const std::size_t base = (static_cast<std::size_t>(k) * nt_ + i) * words_per_row_;
    for (std::size_t j = 0; j < nc_; ++j)
        out[j] = static_cast<std::uint8_t>((words_[base + (j >> 5)] >> (2 * (j & 31))) & 3u);
}

// ---------------------------------------------------------------------------
// PairwiseAnalysis
// ---------------------------------------------------------------------------

std::uint8_t PairwiseAnalysis::compare_one(int endpoint, std::size_t i, std::size_t j) const {
    const auto& col = columns_[static_cast<std::size_t>(endpoint)];
    Comparison c = Comparison::Tie;
    switch (col.kind) {
        case EndpointKind::TimeToEvent:
            c = compare_tte(col.t_time[i], col.t_event[i] != 0, col.c_time[j],
                            col.c_event[j] != 0, col.margin,
                            col.direction == Direction::LargerWins);
            break;
        case EndpointKind::EventCount: {
            const double diff = static_cast<double>(col.t_count[i] - col.c_count[j]);
            c = from_signed(col.direction == Direction::LargerWins ? diff : -diff, col.margin);
            break;
        }
        case EndpointKind::Continuous: {
            const double diff = col.t_time[i] - col.c_time[j];
            c = from_signed(col.direction == Direction::LargerWins ? diff : -diff, col.margin);
            break;
        }
    }
    return static_cast<std::uint8_t>(c);
}

void PairwiseAnalysis::compute_row(std::size_t i, std::span<std::uint8_t> out) const {
    const auto& orders = rotations_->orders;
    std::vector<std::uint8_t> tri(static_cast<std::size_t>(q_));
    for (std::size_t j = 0; j < nc_; ++j) {
        for (int e = 0; e < q_; ++e) tri[static_cast<std::size_t>(e)] = compare_one(e, i, j);
        for (int k = 0; k < p_; ++k) {
            std::uint8_t code = kTie;
            for (int idx : orders[static_cast<std::size_t>(k)]) {
                const std::uint8_t c = tri[static_cast<std::size_t>(idx)];
                if (c != kTie) {
                    code = c;
                    break;
                }
            }
            out[static_cast<std::size_t>(k) * nc_ + j] = code;
        }
    }
}

PairwiseAnalysis::PairwiseAnalysis(std::span<const Subject> treated,
                                   std::span<const Subject> controls,
                                   const RotationSet& rotations,
                                   std::span<const EndpointSpec> specs,
                                   CompareOptions options)
    : nt_(treated.size()), nc_(controls.size()),
      p_(rotations.rotation_count()), q_(rotations.endpoint_count),
      rotations_(&rotations) {
    if (nt_ == 0 || nc_ == 0) throw AnalysisError("pairwise comparison requires nonempty arms");
    if (static_cast<int>(specs.size()) != q_)
        throw ConfigError("endpoint spec count does not match the rotation set");

    // Column-major copies of the outcomes; kind mismatches surface here.
    columns_.resize(static_cast<std::size_t>(q_));
    for (int e = 0; e < q_; ++e) {
        auto& col = columns_[static_cast<std::size_t>(e)];
        const auto& spec = specs[static_cast<std::size_t>(e)];
        col.kind = spec.kind;
        col.direction = spec.direction;
        col.margin = spec.margin;
        auto load = [&](std::span<const Subject> arm, std::vector<double>& time,
                        std::vector<std::uint8_t>& event, std::vector<long long>& count) {
            for (const auto& s : arm) {
                if (static_cast<int>(s.outcomes.size()) != q_)
                    throw ConfigError("subject '" + s.id + "' has wrong outcome count");
                const Outcome& o = s.outcomes[static_cast<std::size_t>(e)];
                if (outcome_kind(o) != spec.kind)
                    throw ConfigError("subject '" + s.id + "' outcome kind does not match endpoint '" +
                                      spec.id + "'");
                switch (spec.kind) {
                    case EndpointKind::TimeToEvent: {
                        const auto& v = std::get<TimeToEventOutcome>(o);
                        time.push_back(v.time);
                        event.push_back(v.event ? 1 : 0);
                        break;
                    }
                    case EndpointKind::EventCount:
                        count.push_back(std::get<EventCountOutcome>(o).count);
                        break;
                    case EndpointKind::Continuous:
                        time.push_back(std::get<ContinuousOutcome>(o).value);
                        break;
                }
            }
        };
        load(treated, col.t_time, col.t_event, col.t_count);
        load(controls, col.c_time, col.c_event, col.c_count);
    }

    const std::int64_t pairs = static_cast<std::int64_t>(nt_) * static_cast<std::int64_t>(nc_);
    if (pairs <= options.table_threshold_pairs) table_.emplace(p_, nt_, nc_);

    counts_.p = p_;
    counts_.q = q_;
    counts_.n_treated = static_cast<std::int64_t>(nt_);
    counts_.n_controls = static_cast<std::int64_t>(nc_);

    // One parallel pass over treated rows. Each row writes disjoint tally
    // slots and (when cached) disjoint table rows, so the merged counts are
    // identical for any worker count.
    const std::size_t cells = static_cast<std::size_t>(p_) * (static_cast<std::size_t>(q_) + 1);
    std::vector<std::int64_t> win_tally(nt_ * cells, 0);  // [i][k][pos], pos==q unused
    std::vector<std::int64_t> loss_tally(nt_ * cells, 0);
    PairTable* table = table_ ? &*table_ : nullptr;
    auto* self = this;

    parallel_for(nt_, options.threads, [self, table, cells, &win_tally, &loss_tally](std::size_t i) {
        std::vector<std::uint8_t> codes(static_cast<std::size_t>(self->p_) * self->nc_);
        std::vector<std::uint8_t> tri(static_cast<std::size_t>(self->q_));
        const auto& orders = self->rotations_->orders;
        std::int64_t* wt = win_tally.data() + i * cells;
        std::int64_t* lt = loss_tally.data() + i * cells;
        for (std::size_t j = 0; j < self->nc_; ++j) {
            for (int e = 0; e < self->q_; ++e)
                tri[static_cast<std::size_t>(e)] = self->compare_one(e, i, j);
            for (int k = 0; k < self->p_; ++k) {
                const auto& order = orders[static_cast<std::size_t>(k)];
                std::uint8_t code = kTie;
                int pos = self->q_;
                for (int t = 0; t < self->q_; ++t) {
                    const std::uint8_t c =
                        tri[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])];
                    if (c != kTie) {
                        code = c;
                        pos = t;
                        break;
                    }
                }
                codes[static_cast<std::size_t>(k) * self->nc_ + j] = code;
                const std::size_t cell =
                    static_cast<std::size_t>(k) * (static_cast<std::size_t>(self->q_) + 1) +
                    static_cast<std::size_t>(pos);
                if (code == kWin) ++wt[cell];
                else if (code == kLoss) ++lt[cell];
            }
        }
        if (table)
            for (int k = 0; k < self->p_; ++k)
                table->set_row(
                    k, i,
                    std::span<const std::uint8_t>(
                        codes.data() + static_cast<std::size_t>(k) * self->nc_, self->nc_));
    });

    counts_.wins.assign(static_cast<std::size_t>(p_), 0);
    counts_.losses.assign(static_cast<std::size_t>(p_), 0);
    counts_.ties.assign(static_cast<std::size_t>(p_), 0);
    counts_.wins_at.assign(static_cast<std::size_t>(p_),
                           std::vector<std::int64_t>(static_cast<std::size_t>(q_), 0));
    counts_.losses_at.assign(static_cast<std::size_t>(p_),
                             std::vector<std::int64_t>(static_cast<std::size_t>(q_), 0));
    counts_.residual_ties_at.assign(static_cast<std::size_t>(p_),
                                    std::vector<std::int64_t>(static_cast<std::size_t>(q_), 0));

    for (std::size_t i = 0; i < nt_; ++i)
        for (int k = 0; k < p_; ++k)
            for (int pos = 0; pos < q_; ++pos) {
                const std::size_t cell =
                    static_cast<std::size_t>(k) * (static_cast<std::size_t>(q_) + 1) +
                    static_cast<std::size_t>(pos);
                counts_.wins_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(pos)] +=
                    win_tally[i * cells + cell];
                counts_.losses_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(pos)] +=
                    loss_tally[i * cells + cell];
            }

    const std::int64_t total = counts_.pair_total();
    for (int k = 0; k < p_; ++k) {
        std::int64_t w = 0, l = 0, resolved = 0;
        for (int pos = 0; pos < q_; ++pos) {
            const std::int64_t wk =
                counts_.wins_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(pos)];
            const std::int64_t lk =
                counts_.losses_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(pos)];
            w += wk;
            l += lk;
            resolved += wk + lk;
            counts_.residual_ties_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(pos)] =
                total - resolved;
        }
        counts_.wins[static_cast<std::size_t>(k)] = w;
        counts_.losses[static_cast<std::size_t>(k)] = l;
        counts_.ties[static_cast<std::size_t>(k)] = total - w - l;
    }
}

void PairwiseAnalysis::row_codes(std::size_t i, std::span<std::uint8_t> out) const {
    if (table_) {
        for (int k = 0; k < p_; ++k)
            table_->unpack_row(k, i, out.subspan(static_cast<std::size_t>(k) * nc_, nc_));
    } else {
        compute_row(i, out);
    }
}

WinCounts count_wins_losses(std::span<const Subject> treated, std::span<const Subject> controls,
                            const RotationSet& rotations, std::span<const EndpointSpec> specs,
                            CompareOptions options) {
    return PairwiseAnalysis(treated, controls, rotations, specs, options).counts();
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

namespace {

Decomposition decompose_weighted(const std::vector<std::vector<double>>& wins_at,
                                 const std::vector<std::vector<double>>& losses_at,
                                 const std::vector<double>& residual_rot1,
                                 double pair_total, int p, const Hierarchy& hierarchy,
                                 std::span<const EndpointSpec> specs) {
    Decomposition d;
    d.pair_total = pair_total;
    d.p = p;
    const double denom = static_cast<double>(p) * pair_total;

    int pos = 0;
    for (const auto& block : hierarchy.blocks) {
        DecompositionRow row;
        for (std::size_t bi = 0; bi < block.size(); ++bi) {
            if (bi) row.label += ", ";
            row.label += specs[static_cast<std::size_t>(block[bi])].id;
        }
        const int lo = pos;
        const int hi = pos + static_cast<int>(block.size()); // exclusive
        pos = hi;
        double w = 0.0, l = 0.0;
        for (int k = 0; k < p; ++k)
            for (int i = lo; i < hi; ++i) {
                w += wins_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
                l += losses_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
            }
        row.win_count = w;
        row.loss_count = l;
        row.win_pct = 100.0 * w / denom;
        row.loss_pct = 100.0 * l / denom;
        // Ties after a block boundary are rotation-invariant; rotation 1 is
        // representative.
        row.tie_pct = 100.0 * residual_rot1[static_cast<std::size_t>(hi - 1)] / pair_total;
        if (l > 0.0) row.win_ratio = w / l;
        d.rows.push_back(std::move(row));
    }
    return d;
}

} // namespace

Decomposition decompose(const WinCounts& counts, const Hierarchy& hierarchy,
                        std::span<const EndpointSpec> specs) {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(counts.p)),
        l(static_cast<std::size_t>(counts.p));
    for (int k = 0; k < counts.p; ++k) {
        w[static_cast<std::size_t>(k)].assign(counts.wins_at[static_cast<std::size_t>(k)].begin(),
                                              counts.wins_at[static_cast<std::size_t>(k)].end());
        l[static_cast<std::size_t>(k)].assign(counts.losses_at[static_cast<std::size_t>(k)].begin(),
                                              counts.losses_at[static_cast<std::size_t>(k)].end());
    }
    std::vector<double> resid(counts.residual_ties_at[0].begin(), counts.residual_ties_at[0].end());
    return decompose_weighted(w, l, resid, static_cast<double>(counts.pair_total()), counts.p,
                              hierarchy, specs);
}

Decomposition decompose_stratified(std::span<const WinCounts> counts,
                                   std::span<const double> weights,
                                   const Hierarchy& hierarchy,
                                   std::span<const EndpointSpec> specs) {
    if (counts.empty() || counts.size() != weights.size())
        throw ConfigError("stratified decomposition: counts/weights mismatch");
    const int p = counts[0].p;
    const int q = counts[0].q;
    std::vector<std::vector<double>> w(static_cast<std::size_t>(p),
                                       std::vector<double>(static_cast<std::size_t>(q), 0.0));
    auto l = w;
    std::vector<double> resid(static_cast<std::size_t>(q), 0.0);
    double pair_total = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        const double ws = weights[s];
        pair_total += ws * static_cast<double>(counts[s].pair_total());
        for (int k = 0; k < p; ++k)
            for (int i = 0; i < q; ++i) {
                w[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] +=
                    ws * static_cast<double>(
                             counts[s].wins_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]);
                l[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] +=
                    ws * static_cast<double>(
                             counts[s].losses_at[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]);
            }
        for (int i = 0; i < q; ++i)
            resid[static_cast<std::size_t>(i)] +=
                ws * static_cast<double>(counts[s].residual_ties_at[0][static_cast<std::size_t>(i)]);
    }
    return decompose_weighted(w, l, resid, pair_total, p, hierarchy, specs);
}

} // namespace rotwin
