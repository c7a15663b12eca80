#include "medsurv/synthetic.hpp"
#include "medsurv/error.hpp"
#include "medsurv/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace medsurv {

void TrueModel::validate() const {
    if (params.beta_params.size() != params.trunc.N)
        throw ConfigError("true model: survival parameter count does not match truncation");
    if (params.theta_params.size() != params.trunc.N)
        throw ConfigError("true model: covariate parameter grid does not match truncation");
    if (censor_age <= landmarks.age_min)
        throw ConfigError("true model: censoring cutoff must exceed the first landmark age");
    if (censor_age > context.partition.upper())
        throw ConfigError("true model: censoring cutoff beyond the hazard partition");
    if (landmarks.age_max < landmarks.age_min)
        throw ConfigError("true model: landmark age range is empty");
}

namespace {

/// Inverse transform of the piecewise-linear cumulative hazard. Returns +inf
/// when the drawn target exceeds the hazard accumulated over the partition.
double draw_event_time(const SurvivalParams &sp, const HazardPartition &partition,
                       const std::vector<double> &ell0, std::mt19937_64 &rng) {
    double lin = 0.0;
    for (std::size_t p = 0; p < ell0.size(); ++p) lin += sp.betas[p] * ell0[p];
    double target = -std::log(draw_uniform(rng)) / std::exp(lin); // baseline cumulative hazard

    double acc = 0.0;
    const std::size_t B = partition.intervals();
    for (std::size_t b = 1; b <= B; ++b) {
        double width = partition.cutpoints[b] - partition.cutpoints[b - 1];
        double seg = sp.lambdas[b - 1] * width;
        if (sp.lambdas[b - 1] > 0.0 && target <= acc + seg)
            return partition.cutpoints[b - 1] + (target - acc) / sp.lambdas[b - 1];
        acc += seg;
    }
    return std::numeric_limits<double>::infinity();
}

std::vector<double> draw_landmark_ages(const LandmarkLaw &law, std::mt19937_64 &rng) {
    std::vector<double> ages(law.count);
    for (;;) {
        for (auto &a : ages)
            a = law.age_min + (law.age_max - law.age_min) * draw_uniform(rng);
        std::sort(ages.begin(), ages.end());
        bool distinct = true;
        for (std::size_t j = 1; j < ages.size(); ++j)
            if (ages[j] <= ages[j - 1]) distinct = false;
        if (distinct || ages.empty()) return ages;
    }
}

SubjectRecord generate_subject(const PosteriorState &state, const ModelContext &ctx,
                               const LandmarkLaw &law, double censor_age, ClusterIndex cluster,
                               double b_m, double b_l, double b_z, std::mt19937_64 &rng) {
    const auto &tp = state.theta_params[static_cast<std::size_t>(cluster.outer)]
                                       [static_cast<std::size_t>(cluster.inner)];
    const auto &sp = state.beta_params[static_cast<std::size_t>(cluster.outer)];

    SubjectRecord rec;
    rec.baseline.resize(ctx.n_baseline());
    for (std::size_t p = 0; p < rec.baseline.size(); ++p) {
        const auto &bp = tp.baseline[p];
        rec.baseline[p] = ctx.schema.baseline_kinds[p] == CovariateKind::kBinary
                              ? draw_bernoulli(rng, bp.prob)
                              : draw_normal(rng, bp.mean, std::sqrt(bp.var));
    }

    double t = draw_event_time(sp, ctx.partition, rec.baseline, rng);
    rec.event_indicator = t <= censor_age ? 1 : 0;
    rec.event_age = std::min(t, censor_age);

    for (double age : draw_landmark_ages(law, rng)) {
        if (age > rec.event_age) break;
        Eigen::RowVectorXd brow = ctx.basis.row(age);
        Landmark lm;
        lm.age = age;
        lm.z = draw_bernoulli(rng, norm_cdf(local_index(tp.theta_z, tp.eta_z, rec.baseline, b_z, brow)));
        lm.l = draw_bernoulli(rng, norm_cdf(local_index(tp.theta_l, tp.eta_l, rec.baseline, b_l, brow)));
        double m_idx = local_index(tp.theta_m, tp.eta_m, rec.baseline, b_m, brow);
        lm.m = ctx.schema.mediator_kind == CovariateKind::kBinary
                   ? draw_bernoulli(rng, norm_cdf(m_idx))
                   : draw_normal(rng, m_idx, std::sqrt(tp.sigma2_m));
        rec.landmarks.push_back(lm);
    }
    return rec;
}

} // namespace

Cohort generate_data_given(const PosteriorState &state, const ModelContext &ctx,
                           const LandmarkLaw &law, double censor_age, std::mt19937_64 &rng) {
    Cohort cohort;
    cohort.schema = ctx.schema;
    cohort.age_bound = std::max(ctx.partition.upper(), law.age_max) + 1.0;
    const std::size_t n = state.assignments.size();
    for (std::size_t i = 0; i < n; ++i) {
        SubjectRecord rec = generate_subject(state, ctx, law, censor_age, state.assignments[i],
                                             state.random_effects.b_m[i],
                                             state.random_effects.b_l[i],
                                             state.random_effects.b_z[i], rng);
        std::ostringstream id;
        id << "s" << i;
        rec.subject_id = id.str();
        cohort.subjects.push_back(std::move(rec));
    }
    return cohort;
}

Cohort generate_cohort(const TrueModel &model, std::size_t n, std::uint64_t seed) {
    model.validate();
    if (n < 1) throw ConfigError("generate_cohort: n must be >= 1");

    Cohort cohort;
    cohort.schema = model.context.schema;
    cohort.age_bound =
        std::max(model.context.partition.upper(), model.landmarks.age_max) + 1.0;

    const auto &sticks = model.params.sticks;
    const std::size_t N = model.params.n_outer(), M = model.params.n_inner();
    const auto &re = model.params.random_effects;

    for (std::size_t i = 0; i < n; ++i) {
        auto rng = substream(seed, i);
        double u = draw_uniform(rng);
        std::size_t cell = N * M - 1;
        double acc = 0.0;
        for (std::size_t c = 0; c < N * M; ++c) {
            acc += sticks.outer[c / M] * sticks.inner[c / M][c % M];
            if (u < acc) {
                cell = c;
                break;
            }
        }
        ClusterIndex cluster{static_cast<int>(cell / M), static_cast<int>(cell % M)};
        double b_m = draw_normal(rng, 0.0, std::sqrt(re.var_m));
        double b_l = draw_normal(rng, 0.0, std::sqrt(re.var_l));
        double b_z = draw_normal(rng, 0.0, std::sqrt(re.var_z));
        SubjectRecord rec = generate_subject(model.params, model.context, model.landmarks,
                                             model.censor_age, cluster, b_m, b_l, b_z, rng);
        std::ostringstream id;
        id << "s" << i;
        rec.subject_id = id.str();
        cohort.subjects.push_back(std::move(rec));
    }
    validate_cohort(cohort);
    return cohort;
}

} // namespace medsurv
