#include "medsurv/cohort.hpp"
#include "medsurv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace medsurv {

namespace {

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

[[noreturn]] void fail(const std::string &subject_id, const std::string &what) {
    throw DataError("subject '" + subject_id + "': " + what);
}

} // namespace

void validate_cohort(const Cohort &cohort) {
    if (cohort.subjects.empty()) throw DataError("cohort is empty");
    const auto &schema = cohort.schema;
    std::set<std::string> seen_ids;

    for (const auto &s : cohort.subjects) {
        if (!seen_ids.insert(s.subject_id).second)
            throw DataError("duplicate subject_id '" + s.subject_id + "'");
        if (s.baseline.size() != schema.n_baseline())
            fail(s.subject_id, "baseline covariate count does not match schema");
        for (std::size_t p = 0; p < s.baseline.size(); ++p) {
            if (!std::isfinite(s.baseline[p]))
                fail(s.subject_id, "non-finite baseline value in column '" +
                                       schema.baseline_names[p] + "'");
            if (schema.baseline_kinds[p] == CovariateKind::kBinary && !is_binary(s.baseline[p]))
                fail(s.subject_id, "non-binary value in binary column '" +
                                       schema.baseline_names[p] + "'");
        }
        if (!(s.event_age >= 0.0 && s.event_age <= cohort.age_bound))
            fail(s.subject_id, "event_age outside [0, age_bound]");
        if (s.event_indicator != 0 && s.event_indicator != 1)
            fail(s.subject_id, "event_indicator must be 0 or 1");

        double prev = -1.0;
        for (std::size_t j = 0; j < s.landmarks.size(); ++j) {
            const auto &lm = s.landmarks[j];
            std::ostringstream at;
            at << "landmark " << (j + 1);
            if (!(lm.age >= 0.0 && lm.age <= cohort.age_bound))
                fail(s.subject_id, at.str() + ": age outside [0, age_bound]");
            if (lm.age <= prev) fail(s.subject_id, at.str() + ": non-monotone ages");
            if (lm.age > s.event_age)
                fail(s.subject_id, at.str() + ": measurement after event");
            if (lm.z != 0 && lm.z != 1) fail(s.subject_id, at.str() + ": non-binary value in binary column 'z'");
            if (!is_binary(lm.l)) fail(s.subject_id, at.str() + ": non-binary value in binary column 'l'");
            if (!std::isfinite(lm.m)) fail(s.subject_id, at.str() + ": non-finite mediator value");
            if (schema.mediator_kind == CovariateKind::kBinary && !is_binary(lm.m))
                fail(s.subject_id, at.str() + ": non-binary value in binary column 'm'");
            prev = lm.age;
        }
    }
}

namespace {

std::vector<double> unique_event_ages(const Cohort &cohort) {
    std::vector<double> ages;
    for (const auto &s : cohort.subjects)
        if (s.event_indicator == 1) ages.push_back(s.event_age);
    std::sort(ages.begin(), ages.end());
    ages.erase(std::unique(ages.begin(), ages.end()), ages.end());
    return ages;
}

} // namespace

bool grid_covers_events(const AgeGrid &grid, const Cohort &cohort) {
    if (grid.ages.empty()) return false;
    auto events = unique_event_ages(cohort);
    double lo = -std::numeric_limits<double>::infinity();
    for (double hi : grid.ages) {
        bool covered = std::any_of(events.begin(), events.end(),
                                   [&](double e) { return e > lo && e <= hi; });
        if (!covered) return false;
        lo = hi;
    }
    return true;
}

AgeGrid build_age_grid(const Cohort &cohort, double target_age, std::size_t max_intervals) {
    if (max_intervals < 1) throw ConfigError("build_age_grid: max_intervals must be >= 1");
    auto events = unique_event_ages(cohort);
    bool any_at_or_below =
        std::any_of(events.begin(), events.end(), [&](double e) { return e <= target_age; });
    if (!any_at_or_below) throw NumericalError("grid infeasible: no events at or below target age");

    // Candidate cutpoints: every unique event age strictly below the target,
    // closed by the target itself.
    std::vector<double> ages;
    for (double e : events)
        if (e < target_age) ages.push_back(e);
    ages.push_back(target_age);

    auto interval_has_event = [&](double lo, double hi) {
        return std::any_of(events.begin(), events.end(),
                           [&](double e) { return e > lo && e <= hi; });
    };

    // Restore coverage of the final interval: if (a_{K-1}, target] is empty,
    // dropping a_{K-1} folds its event into the last interval.
    while (ages.size() >= 2 && !interval_has_event(ages[ages.size() - 2], ages.back()))
        ages.erase(ages.end() - 2);

    // Coarsen left-to-right until K <= max_intervals. Removing the leftmost
    // cutpoint merges the first two intervals, which preserves coverage.
    while (ages.size() > max_intervals) ages.erase(ages.begin());

    AgeGrid grid{std::move(ages)};
    if (!grid_covers_events(grid, cohort))
        throw NumericalError("grid infeasible: coverage invariant unsatisfiable");
    return grid;
}

} // namespace medsurv
