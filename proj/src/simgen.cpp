#include "rotwin/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rotwin/errors.hpp"
#include "rotwin/normal.hpp"

namespace rotwin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double exp_time(double rate, double draw_exp1) {
    return rate > 0.0 ? draw_exp1 / rate : kInf;
}

// Censor time from study entry: administrative end of study plus dropout.
double draw_censor_time(double study_days, double accrual_days, double dropout_rate, Rng& rng) {
    const double entry = accrual_days > 0.0 ? rng.uniform(0.0, accrual_days) : 0.0;
    const double admin = study_days - entry;
    const double dropout = dropout_rate > 0.0 ? rng.exponential(dropout_rate) : kInf;
    return std::min(admin, dropout);
}

} // namespace

// ---------------------------------------------------------------------------
// Copula setting
// ---------------------------------------------------------------------------

void CopulaScenario::validate() const {
    if (beta < 1.0) throw ConfigError("copula scenario: beta must be >= 1");
    if (lambda_death < 0.0 || lambda_nonfatal[0] < 0.0 || lambda_nonfatal[1] < 0.0 ||
        lambda_nonfatal[2] < 0.0)
        throw ConfigError("copula scenario: hazards must be nonnegative");
    if (!(study_days > accrual_days) || accrual_days < 0.0)
        throw ConfigError("copula scenario: need study_days > accrual_days >= 0");
    if (dropout_rate < 0.0) throw ConfigError("copula scenario: negative dropout rate");
    if (n_per_arm < 1) throw ConfigError("copula scenario: n_per_arm must be >= 1");
}

CopulaLatent sample_copula_subject(const CopulaScenario& scenario, int z, Rng& rng) {
    const double inv_beta = 1.0 / scenario.beta;
    const double v = rng.positive_stable(inv_beta);
    // U_i = exp(-(E_i/V)^(1/beta)) are Gumbel-copula uniforms; inverting the
    // exponential survival margin gives T_i = (E_i/V)^(1/beta) / h_i.
    auto margin = [&](double lambda, double alpha) {
        const double h = lambda * std::exp(-alpha * static_cast<double>(z));
        const double e = rng.exponential(1.0);
        return h > 0.0 ? std::pow(e / v, inv_beta) / h : kInf;
    };
    CopulaLatent latent;
    latent.death = margin(scenario.lambda_death, scenario.alpha_death);
    for (int k = 0; k < 3; ++k)
        latent.nonfatal[static_cast<std::size_t>(k)] =
            margin(scenario.lambda_nonfatal[static_cast<std::size_t>(k)],
                   scenario.alpha_nonfatal[static_cast<std::size_t>(k)]);
    return latent;
}

Subject apply_censoring(const CopulaLatent& latent, const CopulaScenario& scenario, Rng& rng) {
    const double censor =
        draw_censor_time(scenario.study_days, scenario.accrual_days, scenario.dropout_rate, rng);

    Subject s;
    s.outcomes.reserve(4);
    const bool death_event = latent.death <= censor;
    s.outcomes.push_back(
        TimeToEventOutcome{death_event ? latent.death : censor, death_event});
    for (int k = 0; k < 3; ++k) {
        const double h = latent.nonfatal[static_cast<std::size_t>(k)];
        // Death censors the non-fatal events: H >= D means no k-th event.
        const bool event = h < latent.death && h <= censor;
        const double horizon = std::min(latent.death, censor);
        s.outcomes.push_back(TimeToEventOutcome{event ? h : horizon, event});
    }
    s.followup = censor;
    return s;
}

std::vector<Subject> generate_copula_dataset(const CopulaScenario& scenario, std::uint64_t seed) {
    scenario.validate();
    const int n = scenario.n_per_arm;
    std::vector<Subject> subjects(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < 2 * n; ++i) {
        const int z = i < n ? 1 : 0;
        Rng rng(seed, static_cast<std::uint64_t>(i) + 1);
        const CopulaLatent latent = sample_copula_subject(scenario, z, rng);
        Subject s = apply_censoring(latent, scenario, rng);
        s.arm = z == 1 ? Arm::Treatment : Arm::Control;
        s.id = (z == 1 ? "t" : "c") + std::to_string(z == 1 ? i + 1 : i - n + 1);
        subjects[static_cast<std::size_t>(i)] = std::move(s);
    }
    return subjects;
}

std::vector<EndpointSpec> copula_endpoints() {
    return {
        {"death", EndpointKind::TimeToEvent, Direction::LargerWins, 0.0},
        {"nonfatal1", EndpointKind::TimeToEvent, Direction::LargerWins, 0.0},
        {"nonfatal2", EndpointKind::TimeToEvent, Direction::LargerWins, 0.0},
        {"nonfatal3", EndpointKind::TimeToEvent, Direction::LargerWins, 0.0},
    };
}

Hierarchy copula_hierarchy() { return Hierarchy{{{0}, {1, 2, 3}}}; }

// ---------------------------------------------------------------------------
// Frailty setting
// ---------------------------------------------------------------------------

void FrailtyScenario::validate() const {
    if (gamma <= 0.0) throw ConfigError("frailty scenario: gamma must be > 0");
    if (max_recurrences < 1) throw ConfigError("frailty scenario: J must be >= 1");
    if (static_cast<int>(alpha_gap.size()) != max_recurrences)
        throw ConfigError("frailty scenario: alpha_gap must have one entry per recurrence");
    if (lambda_death < 0.0 || lambda_gap < 0.0)
        throw ConfigError("frailty scenario: hazards must be nonnegative");
    if (!(study_days > accrual_days) || accrual_days < 0.0)
        throw ConfigError("frailty scenario: need study_days > accrual_days >= 0");
    if (dropout_rate < 0.0) throw ConfigError("frailty scenario: negative dropout rate");
    if (n_per_arm < 1) throw ConfigError("frailty scenario: n_per_arm must be >= 1");
}

bool FrailtyScenario::is_null() const {
    if (alpha_death != 0.0) return false;
    return std::all_of(alpha_gap.begin(), alpha_gap.end(), [](double a) { return a == 0.0; });
}

FrailtyLatent sample_frailty_subject(const FrailtyScenario& scenario, int z, Rng& rng) {
    const double inv_gamma = 1.0 / scenario.gamma;
    const double xi = rng.gamma(inv_gamma, inv_gamma); // mean 1, variance gamma
    FrailtyLatent latent;
    latent.death = exp_time(
        scenario.lambda_death * std::exp(-scenario.alpha_death * static_cast<double>(z)) * xi,
        rng.exponential(1.0));
    latent.gaps.resize(static_cast<std::size_t>(scenario.max_recurrences));
    for (int j = 0; j < scenario.max_recurrences; ++j) {
        const double rate =
            scenario.lambda_gap *
            std::exp(-scenario.alpha_gap[static_cast<std::size_t>(j)] * static_cast<double>(z)) * xi;
        latent.gaps[static_cast<std::size_t>(j)] = exp_time(rate, rng.exponential(1.0));
    }
    return latent;
}

Subject apply_censoring(const FrailtyLatent& latent, const FrailtyScenario& scenario, Rng& rng) {
    const double censor =
        draw_censor_time(scenario.study_days, scenario.accrual_days, scenario.dropout_rate, rng);
    const double horizon = std::min(censor, latent.death); // observation window

    long long nre = 0;
    double first = 0.0, last = 0.0;
    double t = 0.0;
    for (const double gap : latent.gaps) {
        t += gap;
        if (t > horizon) break;
        if (nre == 0) first = t;
        last = t;
        ++nre;
    }

    Subject s;
    s.outcomes.reserve(4);
    const bool death_event = latent.death <= censor;
    s.outcomes.push_back(
        TimeToEventOutcome{death_event ? latent.death : censor, death_event});
    s.outcomes.push_back(EventCountOutcome{nre});
    s.outcomes.push_back(TimeToEventOutcome{nre > 0 ? first : horizon, nre > 0});
    s.outcomes.push_back(TimeToEventOutcome{nre > 0 ? last : horizon, nre > 0});
    s.followup = horizon;
    return s;
}

std::vector<Subject> generate_frailty_dataset(const FrailtyScenario& scenario, std::uint64_t seed) {
    scenario.validate();
    const int n = scenario.n_per_arm;
    std::vector<Subject> subjects(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < 2 * n; ++i) {
        const int z = i < n ? 1 : 0;
        Rng rng(seed, static_cast<std::uint64_t>(i) + 1);
        const FrailtyLatent latent = sample_frailty_subject(scenario, z, rng);
        Subject s = apply_censoring(latent, scenario, rng);
        s.arm = z == 1 ? Arm::Treatment : Arm::Control;
        s.id = (z == 1 ? "t" : "c") + std::to_string(z == 1 ? i + 1 : i - n + 1);
        subjects[static_cast<std::size_t>(i)] = std::move(s);
    }
    return subjects;
}

std::vector<EndpointSpec> frailty_endpoints() {
    return {
        {"death", EndpointKind::TimeToEvent, Direction::LargerWins, 0.0},
        {"nre", EndpointKind::EventCount, Direction::SmallerWins, 0.0},
        {"frt", EndpointKind::TimeToEvent, Direction::LargerWins, 0.0},
        {"lrt", EndpointKind::TimeToEvent, Direction::LargerWins, 0.0},
    };
}

Hierarchy frailty_hierarchy() { return Hierarchy{{{0}, {1}, {2, 3}}}; }

std::vector<Subject> select_endpoints(std::span<const Subject> subjects,
                                      std::span<const int> keep) {
    std::vector<Subject> out;
    out.reserve(subjects.size());
    for (const auto& s : subjects) {
        Subject trimmed = s;
        trimmed.outcomes.clear();
        trimmed.outcomes.reserve(keep.size());
        for (int e : keep) trimmed.outcomes.push_back(s.outcomes[static_cast<std::size_t>(e)]);
        out.push_back(std::move(trimmed));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Log-rank
// ---------------------------------------------------------------------------

LogrankResult logrank_test(std::span<const double> time_treated,
                           std::span<const std::uint8_t> event_treated,
                           std::span<const double> time_control,
                           std::span<const std::uint8_t> event_control) {
    struct Obs {
        double time;
        std::uint8_t event;
        std::uint8_t group; // 1 = treated
    };
    std::vector<Obs> obs;
    obs.reserve(time_treated.size() + time_control.size());
    for (std::size_t i = 0; i < time_treated.size(); ++i)
        obs.push_back({time_treated[i], event_treated[i], 1});
    for (std::size_t j = 0; j < time_control.size(); ++j)
        obs.push_back({time_control[j], event_control[j], 0});
    std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.event > b.event; // events before censorings at tied times
    });

    LogrankResult result;
    double at_risk_t = static_cast<double>(time_treated.size());
    double at_risk_c = static_cast<double>(time_control.size());
    double observed_minus_expected = 0.0;
    double variance = 0.0;

    std::size_t i = 0;
    while (i < obs.size()) {
        const double t = obs[i].time;
        double d_t = 0.0, d_c = 0.0, c_t = 0.0, c_c = 0.0;
        while (i < obs.size() && obs[i].time == t) {
            if (obs[i].event) {
                (obs[i].group ? d_t : d_c) += 1.0;
            } else {
                (obs[i].group ? c_t : c_c) += 1.0;
            }
            ++i;
        }
        const double d = d_t + d_c;
        const double n = at_risk_t + at_risk_c;
        if (d > 0.0 && n > 1.0) {
            result.events += static_cast<std::int64_t>(d);
            observed_minus_expected += d_t - d * at_risk_t / n;
            variance += d * (at_risk_t / n) * (at_risk_c / n) * (n - d) / (n - 1.0);
        } else if (d > 0.0) {
            result.events += static_cast<std::int64_t>(d);
        }
        at_risk_t -= d_t + c_t;
        at_risk_c -= d_c + c_c;
    }

    if (result.events == 0) throw AnalysisError("log-rank test requires at least one event");
    if (variance <= 0.0) {
        if (std::fabs(observed_minus_expected) > 1e-12)
            throw AnalysisError("log-rank test: zero variance with nonzero score");
        result.statistic = 0.0;
        result.p_value = 1.0;
        return result;
    }
    result.statistic = observed_minus_expected * observed_minus_expected / variance;
    result.p_value = chi2_sf_1df(result.statistic);
    return result;
}

void first_event_observation(const Subject& subject, std::span<const EndpointSpec> specs,
                             double& time, bool& event) {
    double first_event_time = kInf;
    double censor_floor = kInf;
    for (std::size_t e = 0; e < specs.size(); ++e) {
        if (specs[e].kind != EndpointKind::TimeToEvent) continue;
        const auto& o = std::get<TimeToEventOutcome>(subject.outcomes[e]);
        if (o.event)
            first_event_time = std::min(first_event_time, o.time);
        else
            censor_floor = std::min(censor_floor, o.time);
    }
    if (first_event_time < kInf) {
        time = first_event_time;
        event = true;
    } else {
        time = censor_floor < kInf ? censor_floor : 0.0;
        event = false;
    }
}

LogrankResult composite_logrank(std::span<const Subject> subjects,
                                std::span<const EndpointSpec> specs) {
    std::vector<double> tt, tc;
    std::vector<std::uint8_t> et, ec;
    for (const auto& s : subjects) {
        double time = 0.0;
        bool event = false;
        first_event_observation(s, specs, time, event);
        if (s.arm == Arm::Treatment) {
            tt.push_back(time);
            et.push_back(event ? 1 : 0);
        } else {
            tc.push_back(time);
            ec.push_back(event ? 1 : 0);
        }
    }
    return logrank_test(tt, et, tc, ec);
}

} // namespace rotwin
