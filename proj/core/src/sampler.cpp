#include "medsurv/sampler.hpp"
#include "medsurv/error.hpp"
#include "medsurv/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace medsurv {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kStickClamp = 1e-12;

double log_or_neg_inf(double x) { return x > 0.0 ? std::log(x) : kNegInf; }
} // namespace

std::vector<double> StickWeights::weights_from_sticks(const std::vector<double> &sticks) {
    std::vector<double> w(sticks.size());
    double remaining = 1.0;
    for (std::size_t r = 0; r < sticks.size(); ++r) {
        w[r] = sticks[r] * remaining;
        remaining *= 1.0 - sticks[r];
    }
    return w;
}

void StickWeights::recompute_weights() {
    outer = weights_from_sticks(outer_sticks);
    inner.resize(inner_sticks.size());
    for (std::size_t r = 0; r < inner_sticks.size(); ++r)
        inner[r] = weights_from_sticks(inner_sticks[r]);
}

// ---------------------------------------------------------------------------
// Prior draws
// ---------------------------------------------------------------------------

namespace {

std::vector<double> lambda_prior_shapes(const HazardPartition &partition, const PriorConfig &pr) {
    const std::size_t B = partition.intervals();
    std::vector<double> shapes(B);
    for (std::size_t b = 0; b < B; ++b) {
        double width = partition.cutpoints[b + 1] - partition.cutpoints[b];
        shapes[b] = b + 1 < B ? width * pr.lambda_star * pr.w : pr.lambda_star * pr.w_b_last;
    }
    return shapes;
}

std::vector<double> lambda_prior_rates(const HazardPartition &partition, const PriorConfig &pr) {
    const std::size_t B = partition.intervals();
    std::vector<double> rates(B);
    for (std::size_t b = 0; b < B; ++b) {
        double width = partition.cutpoints[b + 1] - partition.cutpoints[b];
        rates[b] = b + 1 < B ? width * pr.w : pr.w_b_last;
    }
    return rates;
}

SurvivalParams draw_survival_prior(const ModelContext &ctx, const PriorConfig &pr,
                                   std::mt19937_64 &rng) {
    SurvivalParams sp;
    auto shapes = lambda_prior_shapes(ctx.partition, pr);
    auto rates = lambda_prior_rates(ctx.partition, pr);
    for (std::size_t b = 0; b < shapes.size(); ++b)
        sp.lambdas.push_back(draw_gamma(rng, shapes[b], rates[b]));
    for (Eigen::Index p = 0; p < pr.beta_prior_mean.size(); ++p)
        sp.betas.push_back(draw_normal(rng, pr.beta_prior_mean(p), std::sqrt(pr.beta_prior_var(p))));
    return sp;
}

void split_coef(const Eigen::VectorXd &coef, std::size_t P, Eigen::VectorXd &theta,
                Eigen::VectorXd &eta) {
    theta = coef.head(static_cast<Eigen::Index>(P + 1));
    eta = coef.tail(coef.size() - static_cast<Eigen::Index>(P + 1));
}

Eigen::VectorXd draw_coef_prior(const Eigen::VectorXd &mean, const Eigen::VectorXd &var,
                                std::mt19937_64 &rng) {
    Eigen::VectorXd coef(mean.size());
    for (Eigen::Index j = 0; j < mean.size(); ++j)
        coef(j) = draw_normal(rng, mean(j), std::sqrt(var(j)));
    return coef;
}

ThetaParams draw_theta_prior(const ModelContext &ctx, const PriorConfig &pr,
                             std::mt19937_64 &rng) {
    ThetaParams tp;
    const std::size_t P = ctx.n_baseline();
    split_coef(draw_coef_prior(pr.m_prior_mean, pr.m_prior_var, rng), P, tp.theta_m, tp.eta_m);
    split_coef(draw_coef_prior(pr.l_prior_mean, pr.l_prior_var, rng), P, tp.theta_l, tp.eta_l);
    split_coef(draw_coef_prior(pr.z_prior_mean, pr.z_prior_var, rng), P, tp.theta_z, tp.eta_z);
    tp.sigma2_m = draw_inverse_gamma(rng, pr.ig_m_shape, pr.ig_m_scale);
    tp.baseline.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
        if (ctx.schema.baseline_kinds[p] == CovariateKind::kBinary) {
            tp.baseline[p].prob = draw_beta(rng, pr.base_beta_a, pr.base_beta_b);
        } else {
            tp.baseline[p].var = draw_inverse_gamma(rng, pr.base_ig_shape, pr.base_ig_scale[p]);
            tp.baseline[p].mean = draw_normal(rng, pr.base_mu0[p], std::sqrt(pr.base_mu0_var[p]));
        }
    }
    return tp;
}

} // namespace

PosteriorState draw_initial_state(const Cohort &cohort, const ModelContext &ctx,
                                  const PriorConfig &priors, Truncation trunc,
                                  std::mt19937_64 &rng) {
    if (!priors.finalized()) throw ConfigError("prior configuration not finalized");
    PosteriorState st;
    st.trunc = trunc;
    st.alpha_beta = priors.alpha_beta;

    st.alpha_theta.resize(trunc.N);
    for (std::size_t r = 0; r < trunc.N; ++r)
        st.alpha_theta[r] = draw_gamma(rng, priors.a_theta, priors.b_theta);

    st.sticks.outer_sticks.assign(trunc.N, 1.0);
    for (std::size_t r = 0; r + 1 < trunc.N; ++r)
        st.sticks.outer_sticks[r] = draw_beta(rng, 1.0, st.alpha_beta);
    st.sticks.inner_sticks.assign(trunc.N, std::vector<double>(trunc.M, 1.0));
    for (std::size_t r = 0; r < trunc.N; ++r)
        for (std::size_t s = 0; s + 1 < trunc.M; ++s)
            st.sticks.inner_sticks[r][s] = draw_beta(rng, 1.0, st.alpha_theta[r]);
    st.sticks.recompute_weights();

    for (std::size_t r = 0; r < trunc.N; ++r)
        st.beta_params.push_back(draw_survival_prior(ctx, priors, rng));
    st.theta_params.resize(trunc.N);
    for (std::size_t r = 0; r < trunc.N; ++r)
        for (std::size_t s = 0; s < trunc.M; ++s)
            st.theta_params[r].push_back(draw_theta_prior(ctx, priors, rng));

    auto &re = st.random_effects;
    re.var_m = draw_inverse_gamma(rng, priors.ig_re_shape, priors.ig_re_scale);
    re.var_l = draw_inverse_gamma(rng, priors.ig_re_shape, priors.ig_re_scale);
    re.var_z = draw_inverse_gamma(rng, priors.ig_re_shape, priors.ig_re_scale);
    const std::size_t n = cohort.size();
    for (std::size_t i = 0; i < n; ++i) {
        re.b_m.push_back(draw_normal(rng, 0.0, std::sqrt(re.var_m)));
        re.b_l.push_back(draw_normal(rng, 0.0, std::sqrt(re.var_l)));
        re.b_z.push_back(draw_normal(rng, 0.0, std::sqrt(re.var_z)));
    }

    st.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, trunc.N - 1)(rng));
        auto s = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, trunc.M - 1)(rng));
        st.assignments[i] = {r, s};
    }
    return st;
}

// ---------------------------------------------------------------------------
// GibbsSampler
// ---------------------------------------------------------------------------

GibbsSampler::GibbsSampler(const Cohort &cohort, const ModelContext &context,
                           const PriorConfig &priors, Truncation trunc, std::uint64_t seed)
    : cohort_(cohort), ctx_(context), priors_(priors), trunc_(trunc), rng_(make_rng(seed)) {
    if (!priors_.finalized()) throw ConfigError("prior configuration not finalized");
    rebuild_caches();
    init_state();
}

void GibbsSampler::rebuild_caches() {
    basis_rows_.clear();
    for (const auto &s : cohort_.subjects) {
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(s.landmarks.size()),
                             static_cast<Eigen::Index>(ctx_.spline_dim()));
        for (std::size_t j = 0; j < s.landmarks.size(); ++j)
            rows.row(static_cast<Eigen::Index>(j)) = ctx_.basis.row(s.landmarks[j].age);
        basis_rows_.push_back(std::move(rows));
    }
    lambda_prior_shape_ = lambda_prior_shapes(ctx_.partition, priors_);
    lambda_prior_rate_ = lambda_prior_rates(ctx_.partition, priors_);
}

void GibbsSampler::init_state() {
    state_ = draw_initial_state(cohort_, ctx_, priors_, trunc_, rng_);
}

void GibbsSampler::set_data(const Cohort &cohort) {
    if (cohort.size() != cohort_.size())
        throw DataError("set_data: subject count changed");
    cohort_ = cohort;
    rebuild_caches();
}

bool GibbsSampler::mh_accept(std::mt19937_64 &rng, double log_ratio) {
    if (log_ratio == kNegInf) {
        draw_uniform(rng);
        return false;
    }
    return std::log(draw_uniform(rng)) < log_ratio;
}

double GibbsSampler::block_scale(const std::string &name) {
    return std::exp(blocks_[name].log_scale);
}

void GibbsSampler::record_proposal(const std::string &name, bool accepted) {
    auto &b = blocks_[name];
    b.window_proposals++;
    b.batch_proposals++;
    b.total_proposals++;
    if (accepted) {
        b.window_accepts++;
        b.batch_accepts++;
        b.total_accepts++;
    }
}

void GibbsSampler::adapt_blocks() {
    for (auto &[name, b] : blocks_) {
        if (b.batch_proposals == 0) continue;
        double rate = static_cast<double>(b.batch_accepts) / static_cast<double>(b.batch_proposals);
        double step = 1.0 / std::sqrt(static_cast<double>(b.batches + 1));
        b.log_scale += step * (rate - target_rate_);
        b.log_scale = std::clamp(b.log_scale, -8.0, 4.0);
        b.batch_accepts = b.batch_proposals = 0;
        b.batches++;
    }
}

void GibbsSampler::flush_acceptance_log() {
    for (auto &[name, b] : blocks_) {
        if (b.window_proposals == 0) continue;
        double rate = static_cast<double>(b.window_accepts) / static_cast<double>(b.window_proposals);
        log_.push_back({iter_, name, rate, std::exp(b.log_scale)});
        b.window_accepts = b.window_proposals = 0;
    }
}

std::map<std::string, double> GibbsSampler::acceptance_rates() const {
    std::map<std::string, double> rates;
    for (const auto &[name, b] : blocks_)
        if (b.total_proposals > 0)
            rates[name] =
                static_cast<double>(b.total_accepts) / static_cast<double>(b.total_proposals);
    return rates;
}

std::map<std::string, double> GibbsSampler::proposal_scales() const {
    std::map<std::string, double> scales;
    for (const auto &[name, b] : blocks_) scales[name] = std::exp(b.log_scale);
    return scales;
}

void GibbsSampler::set_proposal_scales(const std::map<std::string, double> &scales) {
    for (const auto &[name, scale] : scales) blocks_[name].log_scale = std::log(scale);
}

// --- step 1: cluster memberships -------------------------------------------

double GibbsSampler::subject_theta_log_lik(std::size_t i, const ThetaParams &tp) const {
    const auto &subj = cohort_.subjects[i];
    const auto &re = state_.random_effects;
    double ll = 0.0;
    for (std::size_t j = 0; j < subj.landmarks.size(); ++j) {
        const auto &lm = subj.landmarks[j];
        Eigen::RowVectorXd brow = basis_rows_[i].row(static_cast<Eigen::Index>(j));
        ll += mediator_log_density(tp, ctx_.schema.mediator_kind, subj.baseline, re.b_m[i], brow,
                                   lm.m);
        ll += confounder_log_density(tp, subj.baseline, re.b_l[i], brow, lm.l);
        ll += exposure_log_density(tp, subj.baseline, re.b_z[i], brow, lm.z);
    }
    ll += baseline_log_density(tp, ctx_.schema, subj.baseline);
    return ll;
}

double GibbsSampler::assignment_cell_log_prob(std::size_t i, std::size_t r, std::size_t s) const {
    const auto &subj = cohort_.subjects[i];
    double lp = log_or_neg_inf(state_.sticks.outer[r]) + log_or_neg_inf(state_.sticks.inner[r][s]);
    if (lp == kNegInf) return kNegInf;
    double lik = survival_log_density(state_.beta_params[r], ctx_.partition, subj.baseline,
                                      subj.event_age, subj.event_indicator);
    lik += subject_theta_log_lik(i, state_.theta_params[r][s]);
    return lp + assign_lik_power_ * lik;
}

void GibbsSampler::step_assignments() {
    const std::size_t N = trunc_.N, M = trunc_.M;
    std::vector<double> lp(N * M);
    for (std::size_t i = 0; i < cohort_.size(); ++i) {
        double best = kNegInf;
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t s = 0; s < M; ++s) {
                lp[r * M + s] = assignment_cell_log_prob(i, r, s);
                best = std::max(best, lp[r * M + s]);
            }
        if (best == kNegInf) {
            std::ostringstream msg;
            msg << "degenerate assignment for subject '" << cohort_.subjects[i].subject_id << "'";
            throw NumericalError(msg.str());
        }
        double total = 0.0;
        for (auto &v : lp) {
            v = std::exp(v - best);
            total += v;
        }
        double u = draw_uniform(rng_) * total;
        std::size_t cell = 0;
        for (; cell + 1 < lp.size(); ++cell) {
            u -= lp[cell];
            if (u <= 0.0) break;
        }
        state_.assignments[i] = {static_cast<int>(cell / M), static_cast<int>(cell % M)};
    }
}

// --- step 2: survival parameters per outer cluster -------------------------

void GibbsSampler::step_beta_params() {
    const std::size_t B = ctx_.partition.intervals();
    for (std::size_t r = 0; r < trunc_.N; ++r) {
        std::vector<SurvivalObs> slice;
        for (std::size_t i = 0; i < cohort_.size(); ++i)
            if (state_.assignments[i].outer == static_cast<int>(r)) {
                const auto &s = cohort_.subjects[i];
                slice.push_back({s.event_age, s.event_indicator, s.baseline});
            }
        auto &sp = state_.beta_params[r];
        if (slice.empty()) {
            sp = draw_survival_prior(ctx_, priors_, rng_);
            continue;
        }

        std::ostringstream lname, bname;
        lname << "lambda[" << r << "]";
        bname << "beta[" << r << "]";
        double cur_ll = pem_log_likelihood(slice, ctx_.partition, sp);

        // Hazard rates: log-scale random walk with a Jacobian correction.
        for (std::size_t b = 0; b < B; ++b) {
            double scale = block_scale(lname.str());
            double old_lambda = sp.lambdas[b];
            double log_new = std::log(old_lambda) + scale * draw_normal(rng_);
            double new_lambda = std::exp(log_new);
            sp.lambdas[b] = new_lambda;
            double new_ll = pem_log_likelihood(slice, ctx_.partition, sp);
            double shape = lambda_prior_shape_[b], rate = lambda_prior_rate_[b];
            double log_ratio = new_ll - cur_ll +
                               (shape - 1.0) * (log_new - std::log(old_lambda)) -
                               rate * (new_lambda - old_lambda) +
                               (log_new - std::log(old_lambda));
            bool ok = mh_accept(rng_, log_ratio);
            record_proposal(lname.str(), ok);
            if (ok)
                cur_ll = new_ll;
            else
                sp.lambdas[b] = old_lambda;
        }

        // Cox coefficients: normal random walk preconditioned by the prior sd.
        for (std::size_t p = 0; p < sp.betas.size(); ++p) {
            double scale = block_scale(bname.str());
            double prior_mean = priors_.beta_prior_mean(static_cast<Eigen::Index>(p));
            double prior_sd = std::sqrt(priors_.beta_prior_var(static_cast<Eigen::Index>(p)));
            double old_beta = sp.betas[p];
            sp.betas[p] = old_beta + scale * prior_sd * draw_normal(rng_);
            double new_ll = pem_log_likelihood(slice, ctx_.partition, sp);
            double dp = sp.betas[p] - prior_mean, dc = old_beta - prior_mean;
            double log_ratio = new_ll - cur_ll - (dp * dp - dc * dc) / (2.0 * prior_sd * prior_sd);
            bool ok = mh_accept(rng_, log_ratio);
            record_proposal(bname.str(), ok);
            if (ok)
                cur_ll = new_ll;
            else
                sp.betas[p] = old_beta;
        }
    }
}

// --- step 3: covariate-model parameters per inner cluster ------------------

void GibbsSampler::probit_coef_sweep(const std::string &block, Eigen::VectorXd &theta,
                                     Eigen::VectorXd &eta, const Eigen::VectorXd &prior_mean,
                                     const Eigen::VectorXd &prior_var,
                                     const std::vector<std::size_t> &members, char process) {
    const std::size_t P = ctx_.n_baseline();
    const auto q = static_cast<Eigen::Index>(P + 1 + ctx_.spline_dim());
    Eigen::VectorXd coef(q);
    coef.head(static_cast<Eigen::Index>(P + 1)) = theta;
    coef.tail(static_cast<Eigen::Index>(ctx_.spline_dim())) = eta;

    // Flatten member observations once; indexes update incrementally per
    // coordinate, so a sweep is O(coords x observations).
    std::vector<double> y;
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> idx;
    const auto &re = state_.random_effects;
    for (std::size_t i : members) {
        const auto &subj = cohort_.subjects[i];
        double offset = process == 'm' ? re.b_m[i] : process == 'l' ? re.b_l[i] : re.b_z[i];
        for (std::size_t j = 0; j < subj.landmarks.size(); ++j) {
            const auto &lm = subj.landmarks[j];
            Eigen::VectorXd x(q);
            x(0) = 1.0;
            for (std::size_t p = 0; p < P; ++p) x(static_cast<Eigen::Index>(p + 1)) = subj.baseline[p];
            x.tail(static_cast<Eigen::Index>(ctx_.spline_dim())) =
                basis_rows_[i].row(static_cast<Eigen::Index>(j)).transpose();
            double value = process == 'm' ? lm.m : process == 'l' ? lm.l : static_cast<double>(lm.z);
            y.push_back(value != 0.0 ? 1.0 : 0.0);
            idx.push_back(coef.dot(x) + offset);
            xs.push_back(std::move(x));
        }
    }

    auto loglik = [&](const std::vector<double> &index) {
        double ll = 0.0;
        for (std::size_t o = 0; o < index.size(); ++o)
            ll += probit_log_mass(y[o] != 0.0, index[o]);
        return ll;
    };
    double cur_ll = loglik(idx);
    std::vector<double> prop_idx(idx.size());

    for (Eigen::Index j = 0; j < q; ++j) {
        double scale = block_scale(block);
        double sd = std::sqrt(prior_var(j));
        double delta = scale * sd * draw_normal(rng_);
        for (std::size_t o = 0; o < idx.size(); ++o) prop_idx[o] = idx[o] + delta * xs[o](j);
        double new_ll = loglik(prop_idx);
        double dn = coef(j) + delta - prior_mean(j), dc = coef(j) - prior_mean(j);
        double log_ratio = new_ll - cur_ll - (dn * dn - dc * dc) / (2.0 * prior_var(j));
        bool ok = mh_accept(rng_, log_ratio);
        record_proposal(block, ok);
        if (ok) {
            coef(j) += delta;
            idx.swap(prop_idx);
            cur_ll = new_ll;
        }
    }
    theta = coef.head(static_cast<Eigen::Index>(P + 1));
    eta = coef.tail(static_cast<Eigen::Index>(ctx_.spline_dim()));
}

void GibbsSampler::update_theta_cell(std::size_t r, std::size_t s,
                                     const std::vector<std::size_t> &members) {
    auto &tp = state_.theta_params[r][s];
    const std::size_t P = ctx_.n_baseline();
    const auto D = static_cast<Eigen::Index>(ctx_.spline_dim());
    const auto q = static_cast<Eigen::Index>(P + 1) + D;
    const auto &re = state_.random_effects;

    if (members.empty()) {
        tp = draw_theta_prior(ctx_, priors_, rng_);
        return;
    }

    if (ctx_.schema.mediator_kind == CovariateKind::kContinuous) {
        // Conjugate multivariate-normal draw for (theta_m, eta_m) given
        // sigma2_m and the random-intercept offsets.
        Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(q, q);
        Eigen::VectorXd xty = Eigen::VectorXd::Zero(q);
        std::size_t n_obs = 0;
        for (std::size_t i : members) {
            const auto &subj = cohort_.subjects[i];
            for (std::size_t j = 0; j < subj.landmarks.size(); ++j) {
                Eigen::VectorXd x(q);
                x(0) = 1.0;
                for (std::size_t p = 0; p < P; ++p)
                    x(static_cast<Eigen::Index>(p + 1)) = subj.baseline[p];
                x.tail(D) = basis_rows_[i].row(static_cast<Eigen::Index>(j)).transpose();
                double yv = subj.landmarks[j].m - re.b_m[i];
                xtx.noalias() += x * x.transpose();
                xty.noalias() += x * yv;
                ++n_obs;
            }
        }
        Eigen::VectorXd prior_prec = priors_.m_prior_var.cwiseInverse();
        Eigen::MatrixXd A = xtx / tp.sigma2_m;
        A.diagonal() += prior_prec;
        Eigen::VectorXd rhs =
            xty / tp.sigma2_m + prior_prec.cwiseProduct(priors_.m_prior_mean);
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success)
            throw NumericalError("theta update: posterior precision not positive definite");
        Eigen::VectorXd mean = llt.solve(rhs);
        Eigen::VectorXd zvec(q);
        for (Eigen::Index j = 0; j < q; ++j) zvec(j) = draw_normal(rng_);
        Eigen::VectorXd coef = mean + llt.matrixU().solve(zvec);
        split_coef(coef, P, tp.theta_m, tp.eta_m);

        double rss = 0.0;
        for (std::size_t i : members) {
            const auto &subj = cohort_.subjects[i];
            for (std::size_t j = 0; j < subj.landmarks.size(); ++j) {
                Eigen::RowVectorXd brow = basis_rows_[i].row(static_cast<Eigen::Index>(j));
                double mu = local_index(tp.theta_m, tp.eta_m, subj.baseline, re.b_m[i], brow);
                double d = subj.landmarks[j].m - mu;
                rss += d * d;
            }
        }
        tp.sigma2_m = draw_inverse_gamma(rng_, priors_.ig_m_shape + 0.5 * static_cast<double>(n_obs),
                                         priors_.ig_m_scale + 0.5 * rss);
    } else {
        std::ostringstream mb;
        mb << "theta_m[" << r << "," << s << "]";
        probit_coef_sweep(mb.str(), tp.theta_m, tp.eta_m, priors_.m_prior_mean, priors_.m_prior_var,
                          members, 'm');
        // No mediator variance enters a probit model; its full conditional is
        // its prior.
        tp.sigma2_m = draw_inverse_gamma(rng_, priors_.ig_m_shape, priors_.ig_m_scale);
    }

    std::ostringstream lb, zb;
    lb << "theta_l[" << r << "," << s << "]";
    zb << "theta_z[" << r << "," << s << "]";
    probit_coef_sweep(lb.str(), tp.theta_l, tp.eta_l, priors_.l_prior_mean, priors_.l_prior_var,
                      members, 'l');
    probit_coef_sweep(zb.str(), tp.theta_z, tp.eta_z, priors_.z_prior_mean, priors_.z_prior_var,
                      members, 'z');

    // Baseline-covariate laws: conjugate normal / inverse-gamma and beta.
    for (std::size_t p = 0; p < P; ++p) {
        auto &bp = tp.baseline[p];
        std::vector<double> vals;
        for (std::size_t i : members) vals.push_back(cohort_.subjects[i].baseline[p]);
        const double n = static_cast<double>(vals.size());
        if (ctx_.schema.baseline_kinds[p] == CovariateKind::kBinary) {
            double k = 0.0;
            for (double v : vals) k += v;
            bp.prob = draw_beta(rng_, priors_.base_beta_a + k, priors_.base_beta_b + n - k);
        } else {
            double sum = 0.0;
            for (double v : vals) sum += v;
            double prec = 1.0 / priors_.base_mu0_var[p] + n / bp.var;
            double mean = (priors_.base_mu0[p] / priors_.base_mu0_var[p] + sum / bp.var) / prec;
            bp.mean = draw_normal(rng_, mean, std::sqrt(1.0 / prec));
            double ss = 0.0;
            for (double v : vals) ss += (v - bp.mean) * (v - bp.mean);
            bp.var = draw_inverse_gamma(rng_, priors_.base_ig_shape + 0.5 * n,
                                        priors_.base_ig_scale[p] + 0.5 * ss);
        }
    }
}

void GibbsSampler::step_theta_params() {
    std::vector<std::vector<std::size_t>> members(trunc_.N * trunc_.M);
    for (std::size_t i = 0; i < cohort_.size(); ++i) {
        const auto &a = state_.assignments[i];
        members[static_cast<std::size_t>(a.outer) * trunc_.M + static_cast<std::size_t>(a.inner)]
            .push_back(i);
    }
    for (std::size_t r = 0; r < trunc_.N; ++r)
        for (std::size_t s = 0; s < trunc_.M; ++s)
            update_theta_cell(r, s, members[r * trunc_.M + s]);
}

// --- steps 4-5: stick weights ----------------------------------------------

void GibbsSampler::step_sticks() {
    const std::size_t N = trunc_.N, M = trunc_.M;
    std::vector<double> n_outer(N, 0.0);
    std::vector<std::vector<double>> n_inner(N, std::vector<double>(M, 0.0));
    for (const auto &a : state_.assignments) {
        n_outer[static_cast<std::size_t>(a.outer)] += 1.0;
        n_inner[static_cast<std::size_t>(a.outer)][static_cast<std::size_t>(a.inner)] += 1.0;
    }

    for (std::size_t r = 0; r + 1 < N; ++r) {
        double tail = 0.0;
        for (std::size_t w = r + 1; w < N; ++w) tail += n_outer[w];
        state_.sticks.outer_sticks[r] = draw_beta(rng_, n_outer[r] + 1.0, state_.alpha_beta + tail);
    }
    state_.sticks.outer_sticks[N - 1] = 1.0;

    for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t s = 0; s + 1 < M; ++s) {
            double tail = 0.0;
            for (std::size_t w = s + 1; w < M; ++w) tail += n_inner[r][w];
            state_.sticks.inner_sticks[r][s] =
                draw_beta(rng_, n_inner[r][s] + 1.0, state_.alpha_theta[r] + tail);
        }
        state_.sticks.inner_sticks[r][M - 1] = 1.0;
    }
    state_.sticks.recompute_weights();
}

// --- steps 6-7: concentration parameters ------------------------------------

void GibbsSampler::step_concentration() {
    const std::size_t N = trunc_.N, M = trunc_.M;
    if (priors_.update_alpha_beta) {
        double rate = priors_.b_beta;
        for (std::size_t r = 0; r + 1 < N; ++r) {
            double stick = std::clamp(state_.sticks.outer_sticks[r], kStickClamp, 1.0 - kStickClamp);
            rate -= std::log1p(-stick);
        }
        state_.alpha_beta =
            draw_gamma(rng_, static_cast<double>(N) + priors_.a_beta - 1.0, rate);
    }
    for (std::size_t r = 0; r < N; ++r) {
        double rate = priors_.b_theta;
        for (std::size_t s = 0; s + 1 < M; ++s) {
            double stick =
                std::clamp(state_.sticks.inner_sticks[r][s], kStickClamp, 1.0 - kStickClamp);
            rate -= std::log1p(-stick);
        }
        state_.alpha_theta[r] =
            draw_gamma(rng_, static_cast<double>(M) + priors_.a_theta - 1.0, rate);
    }
}

// --- step 8: random effects --------------------------------------------------

void GibbsSampler::step_random_effects() {
    auto &re = state_.random_effects;
    const std::size_t n = cohort_.size();

    for (std::size_t i = 0; i < n; ++i) {
        const auto &subj = cohort_.subjects[i];
        const auto &a = state_.assignments[i];
        const auto &tp =
            state_.theta_params[static_cast<std::size_t>(a.outer)][static_cast<std::size_t>(a.inner)];
        const std::size_t n_i = subj.landmarks.size();

        if (ctx_.schema.mediator_kind == CovariateKind::kContinuous) {
            // Exact normal full conditional from the residuals.
            double resid_sum = 0.0;
            for (std::size_t j = 0; j < n_i; ++j) {
                Eigen::RowVectorXd brow = basis_rows_[i].row(static_cast<Eigen::Index>(j));
                double mu = local_index(tp.theta_m, tp.eta_m, subj.baseline, 0.0, brow);
                resid_sum += subj.landmarks[j].m - mu;
            }
            double prec = 1.0 / re.var_m + static_cast<double>(n_i) / tp.sigma2_m;
            double mean = (resid_sum / tp.sigma2_m) / prec;
            re.b_m[i] = draw_normal(rng_, mean, std::sqrt(1.0 / prec));
        } else {
            double scale = block_scale("re_b_m");
            double old_b = re.b_m[i];
            double new_b = old_b + scale * std::sqrt(re.var_m) * draw_normal(rng_);
            double cur = -0.5 * old_b * old_b / re.var_m, prop = -0.5 * new_b * new_b / re.var_m;
            for (std::size_t j = 0; j < n_i; ++j) {
                Eigen::RowVectorXd brow = basis_rows_[i].row(static_cast<Eigen::Index>(j));
                cur += mediator_log_density(tp, CovariateKind::kBinary, subj.baseline, old_b, brow,
                                            subj.landmarks[j].m);
                prop += mediator_log_density(tp, CovariateKind::kBinary, subj.baseline, new_b, brow,
                                             subj.landmarks[j].m);
            }
            bool ok = mh_accept(rng_, prop - cur);
            record_proposal("re_b_m", ok);
            if (ok) re.b_m[i] = new_b;
        }

        auto mh_probit_intercept = [&](const char *block, double &b, double var, char process) {
            double scale = block_scale(block);
            double old_b = b;
            double new_b = old_b + scale * std::sqrt(var) * draw_normal(rng_);
            double cur = -0.5 * old_b * old_b / var, prop = -0.5 * new_b * new_b / var;
            for (std::size_t j = 0; j < n_i; ++j) {
                Eigen::RowVectorXd brow = basis_rows_[i].row(static_cast<Eigen::Index>(j));
                const auto &lm = subj.landmarks[j];
                if (process == 'l') {
                    cur += confounder_log_density(tp, subj.baseline, old_b, brow, lm.l);
                    prop += confounder_log_density(tp, subj.baseline, new_b, brow, lm.l);
                } else {
                    cur += exposure_log_density(tp, subj.baseline, old_b, brow, lm.z);
                    prop += exposure_log_density(tp, subj.baseline, new_b, brow, lm.z);
                }
            }
            bool ok = mh_accept(rng_, prop - cur);
            record_proposal(block, ok);
            if (ok) b = new_b;
        };
        mh_probit_intercept("re_b_l", re.b_l[i], re.var_l, 'l');
        mh_probit_intercept("re_b_z", re.b_z[i], re.var_z, 'z');
    }

    // Mediator intercept variance: conjugate inverse-gamma.
    double ssq = 0.0;
    for (double b : re.b_m) ssq += b * b;
    re.var_m = draw_inverse_gamma(rng_, priors_.ig_re_shape + 0.5 * static_cast<double>(n),
                                  priors_.ig_re_scale + 0.5 * ssq);

    // Confounder / exposure intercept variances: log-scale random walk.
    auto mh_variance = [&](const char *block, double &var, const std::vector<double> &bs) {
        double scale = block_scale(block);
        double old_v = var;
        double new_v = std::exp(std::log(old_v) + scale * draw_normal(rng_));
        auto log_target = [&](double v) {
            double lt = -(priors_.ig_re_shape + 1.0) * std::log(v) - priors_.ig_re_scale / v;
            for (double b : bs) lt += -0.5 * std::log(v) - 0.5 * b * b / v;
            return lt;
        };
        double log_ratio = log_target(new_v) - log_target(old_v) + std::log(new_v) - std::log(old_v);
        bool ok = mh_accept(rng_, log_ratio);
        record_proposal(block, ok);
        if (ok) var = new_v;
    };
    mh_variance("re_var_l", re.var_l, re.b_l);
    mh_variance("re_var_z", re.var_z, re.b_z);
}

void GibbsSampler::iterate() {
    step_assignments();
    step_beta_params();
    step_theta_params();
    step_sticks();
    step_concentration();
    step_random_effects();
    ++iter_;
    if (adapt_ && iter_ % adapt_interval_ == 0) adapt_blocks();
    if (iter_ % log_interval_ == 0) flush_acceptance_log();
}

DrawStore run_chain(const Cohort &cohort, const ModelContext &context, const ChainConfig &config) {
    PriorConfig priors = config.priors;
    if (!priors.finalized()) priors.finalize(cohort, context);

    GibbsSampler sampler(cohort, context, priors, config.trunc, config.seed);
    sampler.set_adaptation(config.adapt);

    DrawStore store;
    store.context = context;
    store.trunc = config.trunc;
    store.burn_in = config.burn_in;
    store.seed = config.seed;
    store.draws.reserve(config.keep);

    const std::size_t total = config.burn_in + config.keep;
    for (std::size_t it = 0; it < total; ++it) {
        if (it == config.burn_in) sampler.set_adaptation(false);
        try {
            sampler.iterate();
        } catch (const std::exception &e) {
            std::ostringstream msg;
            msg << "chain aborted at iteration " << (it + 1) << ": " << e.what();
            throw NumericalError(msg.str());
        }
        if (it >= config.burn_in) store.draws.push_back(sampler.state());
    }
    store.acceptance = sampler.acceptance_log();
    return store;
}

} // namespace medsurv
