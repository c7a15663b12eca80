#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace medsurv {

enum class CovariateKind { kContinuous, kBinary };

/// Names and kinds of the baseline covariates plus the kinds of the
/// time-varying triple (z, l, m). The exposure z and the confounder l are
/// binary in this model family; the mediator m may be continuous or binary.
struct CovariateSchema {
    std::vector<std::string> baseline_names;
    std::vector<CovariateKind> baseline_kinds;
    CovariateKind mediator_kind = CovariateKind::kContinuous;

    std::size_t n_baseline() const { return baseline_names.size(); }
};

/// One covariate-assessment visit: exposure, confounder, and mediator values
/// measured at a given age while the subject was alive.
struct Landmark {
    double age = 0.0;
    int z = 0;
    double l = 0.0;
    double m = 0.0;
};

struct SubjectRecord {
    std::string subject_id;
    std::vector<double> baseline;
    std::vector<Landmark> landmarks;
    double event_age = 0.0;
    int event_indicator = 0; // 1 = event, 0 = right-censored
};

struct Cohort {
    CovariateSchema schema;
    std::vector<SubjectRecord> subjects;
    double age_bound = 120.0; // upper bound on all ages

    std::size_t size() const { return subjects.size(); }
};

/// Strictly increasing ages a_1 < ... < a_K at which covariate updates are
/// simulated during G-computation. Every interval (a_{k-1}, a_k] must contain
/// at least one observed event of the cohort the grid was built from.
struct AgeGrid {
    std::vector<double> ages;

    std::size_t size() const { return ages.size(); }
};

/// Validates every SubjectRecord invariant (ordering, bounds, binary values,
/// schema consistency, unique ids). Throws DataError naming the subject and
/// offending field on the first violation.
void validate_cohort(const Cohort &cohort);

/// Coarsens the cohort's unique event ages into a grid ending at target_age
/// with at most max_intervals intervals, each containing at least one event.
/// Merging is greedy left-to-right, so the result is deterministic.
AgeGrid build_age_grid(const Cohort &cohort, double target_age, std::size_t max_intervals);

/// Direct scan of the event-coverage invariant; used by validation and tests.
bool grid_covers_events(const AgeGrid &grid, const Cohort &cohort);

} // namespace medsurv
