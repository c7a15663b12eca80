#pragma once

#include "medsurv/cohort.hpp"

#include <cstddef>
#include <vector>

namespace medsurv {

/// Partition 0 = v_0 < v_1 < ... < v_B of the follow-up age axis on which the
/// baseline hazard is piecewise constant.
struct HazardPartition {
    std::vector<double> cutpoints; // v_0 .. v_B, v_0 = 0

    std::size_t intervals() const { return cutpoints.empty() ? 0 : cutpoints.size() - 1; }
    double upper() const { return cutpoints.back(); }
    void validate() const;

    /// 1-based interval index b with age in [v_{b-1}, v_b); age = v_B maps to B.
    std::size_t interval_of(double age) const;
};

/// Local Cox model parameters: baseline hazard rates per interval and
/// log-hazard-ratio coefficients over the baseline covariates.
struct SurvivalParams {
    std::vector<double> lambdas; // one per interval, > 0
    std::vector<double> betas;   // one per baseline covariate
};

/// Survival observation slice used by the Poisson expansion.
struct SurvivalObs {
    double time = 0.0;
    int event = 0;
    std::vector<double> baseline;
};

/// Poisson rewriting of the piecewise-exponential likelihood: 0/1 counts N,
/// interval exposures H, and means Theta = exp(beta l^T) H lambda.
struct PoissonExpansion {
    std::vector<std::vector<double>> counts;    // N[i][b], 0 or 1
    std::vector<std::vector<double>> exposures; // H[i][b] >= 0
    std::vector<std::vector<double>> means;     // Theta[i][b] >= 0
    std::vector<double> log_rate;               // delta * (log lambda_b + beta l^T) at the event interval
};

/// Lambda(age | l0, params): piecewise-linear cumulative hazard. Requires
/// 0 <= age <= v_B; evaluation past the partition is an error by design.
double cumulative_hazard(const SurvivalParams &params, const HazardPartition &partition,
                         const std::vector<double> &baseline_covs, double age);

/// exp(-Lambda(age)).
double survival_prob(const SurvivalParams &params, const HazardPartition &partition,
                     const std::vector<double> &baseline_covs, double age);

PoissonExpansion expand_poisson(const std::vector<SurvivalObs> &slice,
                                const HazardPartition &partition, const SurvivalParams &params);

/// Sum over cells of N * log-rate - Theta, which equals the piecewise
/// exponential survival log-likelihood exactly. Returns -inf when an event
/// falls in an interval with zero hazard rate.
double log_likelihood(const PoissonExpansion &expansion);

/// Convenience: expansion + log-likelihood in one pass without materializing
/// the matrices.
double pem_log_likelihood(const std::vector<SurvivalObs> &slice, const HazardPartition &partition,
                          const SurvivalParams &params);

/// Cutpoints at event-age quantiles with v_B = max observed time; merges
/// empty intervals so each contains at least one event.
HazardPartition default_partition(const Cohort &cohort, std::size_t B);

} // namespace medsurv
