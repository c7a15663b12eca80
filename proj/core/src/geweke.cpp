#include "medsurv/error.hpp"
#include "medsurv/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace medsurv {

double GewekeResult::max_abs_z() const {
    double m = 0.0;
    for (double z : z_scores) m = std::max(m, std::abs(z));
    return m;
}

PosteriorState draw_prior_state(const GewekeConfig &cfg, std::mt19937_64 &rng) {
    Cohort shape;
    shape.schema = cfg.context.schema;
    shape.subjects.resize(cfg.n_subjects);
    PosteriorState st = draw_initial_state(shape, cfg.context, cfg.priors, cfg.trunc, rng);
    // Chain initialization uses uniform memberships; the model's joint law
    // draws them from the square-breaking weights.
    const std::size_t N = cfg.trunc.N, M = cfg.trunc.M;
    for (auto &a : st.assignments) {
        double u = draw_uniform(rng);
        double acc = 0.0;
        std::size_t cell = N * M - 1;
        for (std::size_t c = 0; c < N * M; ++c) {
            acc += st.sticks.outer[c / M] * st.sticks.inner[c / M][c % M];
            if (u < acc) {
                cell = c;
                break;
            }
        }
        a = {static_cast<int>(cell / M), static_cast<int>(cell % M)};
    }
    return st;
}

namespace {

std::vector<std::string> statistic_names() {
    return {"outer_stick_1",     "outer_stick_1_sq", "inner_stick_11",  "log_alpha_theta_1",
            "beta_11",           "beta_11_sq",       "log_lambda_11",   "log_lambda_1B",
            "theta_m_icpt_11",   "theta_m_icpt_sq",  "eta_m_1_11",      "log_sigma2_m_11",
            "theta_l_icpt_NM",   "theta_z_icpt_11",  "baseline_par_11", "log_var_bm",
            "log_var_bl",        "b_m_1",            "mean_event_age",  "event_rate"};
}

std::vector<double> compute_statistics(const PosteriorState &st, const Cohort &data,
                                       const CovariateSchema &schema) {
    const std::size_t N = st.n_outer(), M = st.n_inner();
    const auto &tp00 = st.theta_params[0][0];
    const auto &tpNM = st.theta_params[N - 1][M - 1];
    double base_par = schema.baseline_kinds[0] == CovariateKind::kBinary ? tp00.baseline[0].prob
                                                                         : tp00.baseline[0].mean;
    double mean_t = 0.0, mean_d = 0.0;
    for (const auto &s : data.subjects) {
        mean_t += s.event_age;
        mean_d += s.event_indicator;
    }
    mean_t /= static_cast<double>(data.size());
    mean_d /= static_cast<double>(data.size());

    double s1 = st.sticks.outer_sticks[0];
    double b11 = st.beta_params[0].betas.empty() ? 0.0 : st.beta_params[0].betas[0];
    return {s1,
            s1 * s1,
            st.sticks.inner_sticks[0][0],
            std::log(st.alpha_theta[0]),
            b11,
            b11 * b11,
            std::log(st.beta_params[0].lambdas.front()),
            std::log(st.beta_params[0].lambdas.back()),
            tp00.theta_m(0),
            tp00.theta_m(0) * tp00.theta_m(0),
            tp00.eta_m(0),
            std::log(tp00.sigma2_m),
            tpNM.theta_l(0),
            tp00.theta_z(0),
            base_par,
            std::log(st.random_effects.var_m),
            std::log(st.random_effects.var_l),
            st.random_effects.b_m[0],
            mean_t,
            mean_d};
}

struct Moments {
    std::vector<double> sum, sum_sq;
    std::vector<std::vector<double>> batch_means;
    std::vector<double> batch_sum;
    std::size_t count = 0, batch_count = 0, batch_size = 1;

    explicit Moments(std::size_t dim, std::size_t batch)
        : sum(dim, 0.0), sum_sq(dim, 0.0), batch_means(dim), batch_sum(dim, 0.0),
          batch_size(batch) {}

    void add(const std::vector<double> &x) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            sum[j] += x[j];
            sum_sq[j] += x[j] * x[j];
            batch_sum[j] += x[j];
        }
        ++count;
        ++batch_count;
        if (batch_count == batch_size) {
            for (std::size_t j = 0; j < sum.size(); ++j) {
                batch_means[j].push_back(batch_sum[j] / static_cast<double>(batch_size));
                batch_sum[j] = 0.0;
            }
            batch_count = 0;
        }
    }

    double mean(std::size_t j) const { return sum[j] / static_cast<double>(count); }

    double se_iid(std::size_t j) const {
        double m = mean(j);
        double var = sum_sq[j] / static_cast<double>(count) - m * m;
        return std::sqrt(std::max(var, 0.0) / static_cast<double>(count));
    }

    /// Batch-means standard error; accounts for autocorrelation.
    double se_batch(std::size_t j) const {
        const auto &bm = batch_means[j];
        if (bm.size() < 2) return se_iid(j);
        double m = 0.0;
        for (double v : bm) m += v;
        m /= static_cast<double>(bm.size());
        double var = 0.0;
        for (double v : bm) var += (v - m) * (v - m);
        var /= static_cast<double>(bm.size() - 1);
        return std::sqrt(var / static_cast<double>(bm.size()));
    }
};

} // namespace

GewekeResult geweke_harness(const GewekeConfig &cfg) {
    if (!cfg.priors.finalized())
        throw ConfigError("geweke harness: priors must be finalized with explicit centering");
    if (cfg.sweeps < 100) throw ConfigError("geweke harness: too few sweeps");

    const std::size_t dim = statistic_names().size();
    const std::size_t batch = std::max<std::size_t>(cfg.sweeps / 50, 2);

    // Marginal-conditional simulator: independent prior + data draws.
    Moments mc(dim, batch);
    {
        auto rng = substream(cfg.seed, 0x4d43);
        for (std::size_t t = 0; t < cfg.sweeps; ++t) {
            PosteriorState st = draw_prior_state(cfg, rng);
            Cohort data =
                generate_data_given(st, cfg.context, cfg.landmarks, cfg.censor_age, rng);
            mc.add(compute_statistics(st, data, cfg.context.schema));
        }
    }

    // Pilot chain tunes proposal scales; the measured chain runs fixed-kernel.
    std::map<std::string, double> scales;
    {
        auto rng = substream(cfg.seed, 0x5049);
        PosteriorState st = draw_prior_state(cfg, rng);
        Cohort data = generate_data_given(st, cfg.context, cfg.landmarks, cfg.censor_age, rng);
        GibbsSampler pilot(data, cfg.context, cfg.priors, cfg.trunc,
                           substream_seed(cfg.seed, 0x5050));
        pilot.set_state(std::move(st));
        pilot.set_assignment_likelihood_power(cfg.assignment_likelihood_power);
        pilot.set_adaptation(true);
        for (std::size_t t = 0; t < 1500; ++t) {
            pilot.iterate();
            data = generate_data_given(pilot.state(), cfg.context, cfg.landmarks, cfg.censor_age,
                                       rng);
            pilot.set_data(data);
        }
        scales = pilot.proposal_scales();
    }

    // Successive-conditional simulator: alternate one Gibbs sweep with a data
    // regeneration; starts at stationarity, kernel fixed throughout.
    Moments sc(dim, batch);
    {
        auto rng = substream(cfg.seed, 0x5343);
        PosteriorState st = draw_prior_state(cfg, rng);
        Cohort data = generate_data_given(st, cfg.context, cfg.landmarks, cfg.censor_age, rng);
        GibbsSampler chain(data, cfg.context, cfg.priors, cfg.trunc,
                           substream_seed(cfg.seed, 0x5347));
        chain.set_state(std::move(st));
        chain.set_adaptation(false);
        chain.set_proposal_scales(scales);
        chain.set_assignment_likelihood_power(cfg.assignment_likelihood_power);
        for (std::size_t t = 0; t < cfg.sweeps; ++t) {
            chain.set_data(data);
            chain.iterate();
            data = generate_data_given(chain.state(), cfg.context, cfg.landmarks, cfg.censor_age,
                                       rng);
            sc.add(compute_statistics(chain.state(), data, cfg.context.schema));
        }
    }

    GewekeResult result;
    result.names = statistic_names();
    for (std::size_t j = 0; j < dim; ++j) {
        double se = std::sqrt(mc.se_iid(j) * mc.se_iid(j) + sc.se_batch(j) * sc.se_batch(j));
        result.marginal_mean.push_back(mc.mean(j));
        result.successive_mean.push_back(sc.mean(j));
        result.marginal_se.push_back(mc.se_iid(j));
        result.successive_se.push_back(sc.se_batch(j));
        result.z_scores.push_back(se > 0.0 ? (mc.mean(j) - sc.mean(j)) / se : 0.0);
    }
    return result;
}

} // namespace medsurv
