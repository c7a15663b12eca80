#pragma once

#include "medsurv/gcomp.hpp"
#include "medsurv/sampler.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace medsurv {

/// Landmark-age generation law: a fixed number of visits per subject at ages
/// drawn uniformly on [age_min, age_max] (sorted, distinct).
struct LandmarkLaw {
    std::size_t count = 3;
    double age_min = 1.0;
    double age_max = 8.0;
};

/// A fully known instance of the joint model used to generate cohorts and to
/// compute ground-truth survival by quadrature. `params` plays the role of
/// one posterior draw; its per-subject fields (assignments, intercepts) are
/// ignored by the generator, which draws fresh ones per subject.
struct TrueModel {
    ModelContext context;
    PosteriorState params;
    LandmarkLaw landmarks;
    double censor_age = 0.0; // administrative cutoff

    void validate() const;
};

/// Simulates a cohort: per subject, cluster membership from the square-breaking
/// weights, baseline covariates and random intercepts, an event time by inverse
/// transform of the piecewise-linear cumulative hazard, administrative
/// censoring, and covariate values at landmark ages truncated at the observed
/// time. Output always passes data-model validation. Per-subject randomness is
/// keyed on (seed, subject index).
Cohort generate_cohort(const TrueModel &model, std::size_t n, std::uint64_t seed);

struct QuadratureSpec {
    std::size_t gh_nodes = 20; // per continuous integration dimension
};

/// Exact value of the G-computation survival functional under the true model,
/// by exhaustive enumeration of binary confounder/mediator grid paths and
/// Gauss-Hermite integration over random intercepts and continuous baseline
/// covariates. Tractable family: binary l and m, grid K <= 3, at most two
/// continuous baseline covariates, at most 16 mixture cells.
double truth_by_quadrature(const TrueModel &model, const GCompConfig &config, const Regime &z1,
                           const Regime &z2, const QuadratureSpec &spec = {});

/// Gauss-Hermite nodes/weights for integrating E[f(X)], X ~ N(mean, var).
void gauss_hermite_normal(std::size_t n, double mean, double var, std::vector<double> &nodes,
                          std::vector<double> &weights);

// ---------------------------------------------------------------------------
// Joint-distribution ("getting it right") validation harness
// ---------------------------------------------------------------------------

struct GewekeConfig {
    ModelContext context;
    PriorConfig priors; // finalized with explicit centering (data-independent)
    Truncation trunc;
    LandmarkLaw landmarks;
    double censor_age = 0.0;
    std::size_t n_subjects = 5;
    std::size_t sweeps = 50000;
    std::uint64_t seed = 1;
    /// != 1 produces the deliberately corrupted sampler variant (assignment
    /// likelihood raised to this power).
    double assignment_likelihood_power = 1.0;
};

struct GewekeResult {
    std::vector<std::string> names;
    std::vector<double> z_scores;
    std::vector<double> marginal_mean, successive_mean;
    std::vector<double> marginal_se, successive_se;

    double max_abs_z() const;
};

/// Compares marginal-conditional draws (prior + data) against the
/// successive-conditional chain (Gibbs update, then data regeneration) on a
/// fixed battery of 20 statistics. A correct sampler keeps every |z| small.
GewekeResult geweke_harness(const GewekeConfig &config);

/// Draws a full prior state with cluster memberships from the stick weights
/// (the model's joint law, unlike chain initialization which is uniform).
PosteriorState draw_prior_state(const GewekeConfig &config, std::mt19937_64 &rng);

/// Regenerates data conditional on every latent in `state` (memberships,
/// intercepts, cluster parameters). Shared by the generator and the harness.
Cohort generate_data_given(const PosteriorState &state, const ModelContext &context,
                           const LandmarkLaw &law, double censor_age, std::mt19937_64 &rng);

} // namespace medsurv
