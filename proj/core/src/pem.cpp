#include "medsurv/pem.hpp"
#include "medsurv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace medsurv {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double dot(const std::vector<double> &a, const std::vector<double> &b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}
} // namespace

void HazardPartition::validate() const {
    if (cutpoints.size() < 2) throw ConfigError("hazard partition needs at least one interval");
    if (cutpoints.front() != 0.0) throw ConfigError("hazard partition must start at 0");
    for (std::size_t i = 1; i < cutpoints.size(); ++i)
        if (cutpoints[i] <= cutpoints[i - 1])
            throw ConfigError("hazard partition cutpoints must be strictly increasing");
}

std::size_t HazardPartition::interval_of(double age) const {
    const std::size_t B = intervals();
    if (age < 0.0) throw NumericalError("age < 0 in hazard partition lookup");
    if (age > cutpoints.back()) throw NumericalError("age beyond hazard partition upper bound");
    for (std::size_t b = 1; b < B; ++b)
        if (age < cutpoints[b]) return b;
    return B; // includes age == v_B
}

double cumulative_hazard(const SurvivalParams &params, const HazardPartition &partition,
                         const std::vector<double> &baseline_covs, double age) {
    if (age == 0.0) return 0.0;
    const std::size_t b = partition.interval_of(age);
    const double scale = std::exp(dot(params.betas, baseline_covs));
    double acc = 0.0;
    for (std::size_t c = 1; c < b; ++c)
        acc += params.lambdas[c - 1] * (partition.cutpoints[c] - partition.cutpoints[c - 1]);
    acc += params.lambdas[b - 1] * (age - partition.cutpoints[b - 1]);
    return scale * acc;
}

double survival_prob(const SurvivalParams &params, const HazardPartition &partition,
                     const std::vector<double> &baseline_covs, double age) {
    return std::exp(-cumulative_hazard(params, partition, baseline_covs, age));
}

PoissonExpansion expand_poisson(const std::vector<SurvivalObs> &slice,
                                const HazardPartition &partition, const SurvivalParams &params) {
    const std::size_t B = partition.intervals();
    PoissonExpansion ex;
    ex.counts.reserve(slice.size());
    ex.exposures.reserve(slice.size());
    ex.means.reserve(slice.size());
    ex.log_rate.reserve(slice.size());

    for (const auto &obs : slice) {
        if (obs.time > partition.upper())
            throw NumericalError("observation time beyond hazard partition upper bound");
        const double lin = dot(params.betas, obs.baseline);
        const double scale = std::exp(lin);
        std::vector<double> N(B, 0.0), H(B, 0.0), Theta(B, 0.0);
        const std::size_t bi = partition.interval_of(obs.time);
        for (std::size_t b = 1; b <= B; ++b) {
            const double lo = partition.cutpoints[b - 1];
            const double hi = partition.cutpoints[b];
            if (b < bi)
                H[b - 1] = hi - lo;
            else if (b == bi)
                H[b - 1] = obs.time - lo;
            Theta[b - 1] = scale * H[b - 1] * params.lambdas[b - 1];
        }
        double lr = 0.0;
        if (obs.event == 1) {
            N[bi - 1] = 1.0;
            lr = params.lambdas[bi - 1] > 0.0 ? std::log(params.lambdas[bi - 1]) + lin : kNegInf;
        }
        ex.counts.push_back(std::move(N));
        ex.exposures.push_back(std::move(H));
        ex.means.push_back(std::move(Theta));
        ex.log_rate.push_back(lr);
    }
    return ex;
}

double log_likelihood(const PoissonExpansion &expansion) {
    double ll = 0.0;
    for (std::size_t i = 0; i < expansion.counts.size(); ++i) {
        for (std::size_t b = 0; b < expansion.counts[i].size(); ++b) {
            if (expansion.counts[i][b] > 0.0) {
                if (expansion.log_rate[i] == kNegInf) return kNegInf;
                ll += expansion.counts[i][b] * expansion.log_rate[i];
            }
            ll -= expansion.means[i][b];
        }
    }
    return ll;
}

double pem_log_likelihood(const std::vector<SurvivalObs> &slice, const HazardPartition &partition,
                          const SurvivalParams &params) {
    double ll = 0.0;
    for (const auto &obs : slice) {
        if (obs.time > partition.upper())
            throw NumericalError("observation time beyond hazard partition upper bound");
        const double lin = dot(params.betas, obs.baseline);
        if (obs.event == 1) {
            const std::size_t b = partition.interval_of(obs.time);
            if (params.lambdas[b - 1] <= 0.0) return kNegInf;
            ll += std::log(params.lambdas[b - 1]) + lin;
        }
        ll -= cumulative_hazard(params, partition, obs.baseline, obs.time);
    }
    return ll;
}

HazardPartition default_partition(const Cohort &cohort, std::size_t B) {
    if (B < 1) throw ConfigError("default_partition: B must be >= 1");
    std::vector<double> events;
    double max_time = 0.0;
    for (const auto &s : cohort.subjects) {
        max_time = std::max(max_time, s.event_age);
        if (s.event_indicator == 1) events.push_back(s.event_age);
    }
    std::sort(events.begin(), events.end());
    std::set<double> distinct(events.begin(), events.end());
    if (distinct.size() < B)
        throw NumericalError("default_partition: fewer distinct event ages than intervals");
    if (max_time <= 0.0) throw DataError("default_partition: no positive observation times");

    std::vector<double> cuts{0.0};
    const double n = static_cast<double>(events.size());
    for (std::size_t b = 1; b < B; ++b) {
        double p = static_cast<double>(b) / static_cast<double>(B);
        double h = (n - 1.0) * p;
        auto lo = static_cast<std::size_t>(std::floor(h));
        auto hi = std::min(lo + 1, events.size() - 1);
        double frac = h - std::floor(h);
        double q = events[lo] * (1.0 - frac) + events[hi] * frac;
        if (q > cuts.back() && q < max_time) cuts.push_back(q);
    }
    cuts.push_back(max_time);

    // Merge any interval without an event into its right neighbour.
    auto has_event = [&](double lo, double hi) {
        return std::any_of(events.begin(), events.end(),
                           [&](double e) { return e > lo && e <= hi; });
    };
    // First interval is [0, v_1]: treat an event at exactly 0 as covered.
    for (std::size_t b = 1; b + 1 < cuts.size();) {
        bool ok = has_event(cuts[b - 1], cuts[b]) ||
                  (b == 1 && !events.empty() && events.front() == 0.0);
        if (ok)
            ++b;
        else
            cuts.erase(cuts.begin() + static_cast<std::ptrdiff_t>(b));
    }
    // Last interval can be empty when the longest follow-up is censored.
    while (cuts.size() > 2 && !has_event(cuts[cuts.size() - 2], cuts.back()))
        cuts.erase(cuts.end() - 2);

    HazardPartition partition{std::move(cuts)};
    partition.validate();
    return partition;
}

} // namespace medsurv
