#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rotwin/endpoint.hpp"
#include "rotwin/hierarchy.hpp"
#include "rotwin/rng.hpp"

namespace rotwin {

// ---------------------------------------------------------------------------
// Correlated multi-endpoint survival times: Gumbel-Hougaard copula with
// exponential margins. One fatal event plus three non-fatal events.
// ---------------------------------------------------------------------------

struct CopulaScenario {
    double lambda_death = 0.0008;                          // baseline hazard per day
    std::array<double, 3> lambda_nonfatal{0.002, 0.0015, 0.001};
    double beta = 1.1;                                     // >= 1; Kendall tau = 1 - 1/beta
    double alpha_death = 0.0;                              // treatment log-hazard effects
    std::array<double, 3> alpha_nonfatal{0.0, 0.0, 0.0};
    double study_days = 1000.0;
    double accrual_days = 200.0;
    double dropout_rate = 0.00016;                         // hazard per day
    int n_per_arm = 200;

    void validate() const;
    bool is_null() const {
        return alpha_death == 0.0 && alpha_nonfatal[0] == 0.0 && alpha_nonfatal[1] == 0.0 &&
               alpha_nonfatal[2] == 0.0;
    }
};

struct CopulaLatent {
    double death = 0.0;
    std::array<double, 3> nonfatal{0.0, 0.0, 0.0};
};

// Latent event times with the joint survival function
//   exp(-[(h_D y_1)^beta + sum_k (h_k y_{k+1})^beta]^{1/beta}),
// sampled by the positive-stable construction; margins are exponential with
// rates h(z) = lambda * exp(-alpha * z).
CopulaLatent sample_copula_subject(const CopulaScenario& scenario, int z, Rng& rng);

// Applies uniform accrual entry, exponential dropout, administrative
// censoring, and censoring of non-fatal events by death.
Subject apply_censoring(const CopulaLatent& latent, const CopulaScenario& scenario, Rng& rng);

// Treated subjects first, then controls; per-subject substreams keyed on
// (seed, subject index) make the dataset independent of worker scheduling.
std::vector<Subject> generate_copula_dataset(const CopulaScenario& scenario, std::uint64_t seed);

std::vector<EndpointSpec> copula_endpoints();
Hierarchy copula_hierarchy(); // death alone, then the three non-fatal events as one block

// ---------------------------------------------------------------------------
// Fatal plus recurrent events: Gamma frailty on gap times.
// ---------------------------------------------------------------------------

struct FrailtyScenario {
    double lambda_death = 0.0008;
    double lambda_gap = 0.01;
    double gamma = 0.2;              // frailty variance; xi ~ Gamma(1/gamma, 1/gamma)
    double alpha_death = 0.0;
    std::vector<double> alpha_gap;   // length max_recurrences
    int max_recurrences = 2;         // J
    double study_days = 1000.0;
    double accrual_days = 200.0;
    double dropout_rate = 0.00016;
    int n_per_arm = 200;

    void validate() const;
    bool is_null() const;
};

struct FrailtyLatent {
    double death = 0.0;
    std::vector<double> gaps; // U_1..U_J; event times are the running sums
};

FrailtyLatent sample_frailty_subject(const FrailtyScenario& scenario, int z, Rng& rng);

// Observation window is min(censor, death): recurrences are counted while
// T_j stays inside it, and the NRE/FRT/LRT summaries come from the observed
// recurrences only.
Subject apply_censoring(const FrailtyLatent& latent, const FrailtyScenario& scenario, Rng& rng);

std::vector<Subject> generate_frailty_dataset(const FrailtyScenario& scenario, std::uint64_t seed);

// death > NRE > {FRT, LRT} as one equal-priority block
std::vector<EndpointSpec> frailty_endpoints();
Hierarchy frailty_hierarchy();

// Copies of the subjects keeping only the given endpoint indices, for
// comparators defined on endpoint subsets.
std::vector<Subject> select_endpoints(std::span<const Subject> subjects,
                                      std::span<const int> keep);

// ---------------------------------------------------------------------------
// Log-rank comparator (time to first composite event)
// ---------------------------------------------------------------------------

struct LogrankResult {
    double statistic = 0.0; // chi-square, 1 df
    double p_value = 1.0;
    std::int64_t events = 0;
};

LogrankResult logrank_test(std::span<const double> time_treated,
                           std::span<const std::uint8_t> event_treated,
                           std::span<const double> time_control,
                           std::span<const std::uint8_t> event_control);

// First observed event across the subject's time-to-event endpoints; falls
// back to the common censoring time when nothing was observed.
void first_event_observation(const Subject& subject, std::span<const EndpointSpec> specs,
                             double& time, bool& event);

LogrankResult composite_logrank(std::span<const Subject> subjects,
                                std::span<const EndpointSpec> specs);

} // namespace rotwin
