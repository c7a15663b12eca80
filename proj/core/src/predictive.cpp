#include "medsurv/predictive.hpp"
#include "medsurv/error.hpp"
#include "medsurv/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace medsurv {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_or_neg_inf(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

double log_sum_exp(const std::vector<double> &v) {
    double best = kNegInf;
    for (double x : v) best = std::max(best, x);
    if (best == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - best);
    return best + std::log(acc);
}
} // namespace

void History::validate(const CovariateSchema &schema) const {
    const std::size_t K = grid.size();
    if (z.size() > K || l.size() > K || m.size() > K)
        throw DataError("history longer than its age grid");
    for (int zv : z)
        if (zv != 0 && zv != 1) throw DataError("history exposure values must be binary");
    for (double lv : l)
        if (lv != 0.0 && lv != 1.0) throw DataError("history confounder values must be binary");
    if (schema.mediator_kind == CovariateKind::kBinary)
        for (double mv : m)
            if (mv != 0.0 && mv != 1.0) throw DataError("history mediator values must be binary");
}

WeightAccumulator::WeightAccumulator(const PosteriorState &state, const ModelContext &context,
                                     std::vector<double> ell0, double b_m, double b_l, double b_z)
    : state_(&state), ctx_(&context), ell0_(std::move(ell0)), b_m_(b_m), b_l_(b_l), b_z_(b_z) {
    const std::size_t N = state.n_outer(), M = state.n_inner();
    cell_lw_.resize(N * M);
    dot_m_.resize(N * M);
    dot_l_.resize(N * M);
    dot_z_.resize(N * M);
    surv_scale_.resize(N);

    auto theta_dot = [&](const Eigen::VectorXd &theta) {
        double v = theta(0);
        for (std::size_t p = 0; p < ell0_.size(); ++p)
            v += theta(static_cast<Eigen::Index>(p + 1)) * ell0_[p];
        return v;
    };

    for (std::size_t r = 0; r < N; ++r) {
        double lin = 0.0;
        for (std::size_t p = 0; p < ell0_.size(); ++p)
            lin += state.beta_params[r].betas[p] * ell0_[p];
        surv_scale_[r] = std::exp(lin);
        for (std::size_t s = 0; s < M; ++s) {
            const auto &tp = state.theta_params[r][s];
            const std::size_t cell = r * M + s;
            dot_m_[cell] = theta_dot(tp.theta_m);
            dot_l_[cell] = theta_dot(tp.theta_l);
            dot_z_[cell] = theta_dot(tp.theta_z);
            cell_lw_[cell] = log_or_neg_inf(state.sticks.outer[r]) +
                             log_or_neg_inf(state.sticks.inner[r][s]) +
                             baseline_log_density(tp, ctx_->schema, ell0_);
        }
    }
}

void WeightAccumulator::add_exposure(const Eigen::RowVectorXd &basis_row, int z) {
    const std::size_t N = state_->n_outer(), M = state_->n_inner();
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t s = 0; s < M; ++s) {
            const std::size_t cell = r * M + s;
            const auto &tp = state_->theta_params[r][s];
            double idx = dot_z_[cell] + b_z_ + tp.eta_z.dot(basis_row.transpose());
            cell_lw_[cell] += probit_log_mass(z, idx);
        }
}

double WeightAccumulator::cell_confounder_log_density(std::size_t cell,
                                                      const Eigen::RowVectorXd &basis_row,
                                                      double l) const {
    const std::size_t M = state_->n_inner();
    const auto &tp = state_->theta_params[cell / M][cell % M];
    double idx = dot_l_[cell] + b_l_ + tp.eta_l.dot(basis_row.transpose());
    return probit_log_mass(l != 0.0, idx);
}

double WeightAccumulator::cell_mediator_log_density(std::size_t cell,
                                                    const Eigen::RowVectorXd &basis_row,
                                                    double m) const {
    const std::size_t M = state_->n_inner();
    const auto &tp = state_->theta_params[cell / M][cell % M];
    double idx = dot_m_[cell] + b_m_ + tp.eta_m.dot(basis_row.transpose());
    if (ctx_->schema.mediator_kind == CovariateKind::kBinary)
        return probit_log_mass(m != 0.0, idx);
    return norm_log_pdf(m, idx, tp.sigma2_m);
}

void WeightAccumulator::add_confounder(const Eigen::RowVectorXd &basis_row, double l) {
    for (std::size_t cell = 0; cell < cell_lw_.size(); ++cell)
        cell_lw_[cell] += cell_confounder_log_density(cell, basis_row, l);
}

void WeightAccumulator::add_mediator(const Eigen::RowVectorXd &basis_row, double m) {
    for (std::size_t cell = 0; cell < cell_lw_.size(); ++cell)
        cell_lw_[cell] += cell_mediator_log_density(cell, basis_row, m);
}

std::vector<double> WeightAccumulator::cell_weights() const {
    double norm = log_sum_exp(cell_lw_);
    if (norm == kNegInf) throw NumericalError("degenerate history: all mixture weights vanish");
    std::vector<double> w(cell_lw_.size());
    for (std::size_t c = 0; c < w.size(); ++c) w[c] = std::exp(cell_lw_[c] - norm);
    return w;
}

std::vector<double> WeightAccumulator::outer_weights() const {
    const std::size_t N = state_->n_outer(), M = state_->n_inner();
    std::vector<double> lw(N);
    for (std::size_t r = 0; r < N; ++r) {
        std::vector<double> row(cell_lw_.begin() + static_cast<std::ptrdiff_t>(r * M),
                                cell_lw_.begin() + static_cast<std::ptrdiff_t>((r + 1) * M));
        lw[r] = log_sum_exp(row);
    }
    double norm = log_sum_exp(lw);
    if (norm == kNegInf) throw NumericalError("degenerate history: all mixture weights vanish");
    std::vector<double> w(N);
    for (std::size_t r = 0; r < N; ++r) w[r] = std::exp(lw[r] - norm);
    return w;
}

double WeightAccumulator::mixture_survival(double age) const {
    auto w = outer_weights();
    double s = 0.0;
    for (std::size_t r = 0; r < w.size(); ++r) {
        if (w[r] == 0.0) continue;
        s += w[r] * std::exp(-cumulative_hazard(state_->beta_params[r], ctx_->partition, ell0_, age));
    }
    return s;
}

double WeightAccumulator::mediator_density(const Eigen::RowVectorXd &basis_row, double m) const {
    auto w = cell_weights();
    double acc = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c)
        if (w[c] > 0.0) acc += w[c] * std::exp(cell_mediator_log_density(c, basis_row, m));
    return acc;
}

double WeightAccumulator::confounder_density(const Eigen::RowVectorXd &basis_row, double l) const {
    auto w = cell_weights();
    double acc = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c)
        if (w[c] > 0.0) acc += w[c] * std::exp(cell_confounder_log_density(c, basis_row, l));
    return acc;
}

namespace {
std::size_t draw_categorical(const std::vector<double> &w, std::mt19937_64 &rng) {
    double u = draw_uniform(rng);
    double acc = 0.0;
    for (std::size_t c = 0; c + 1 < w.size(); ++c) {
        acc += w[c];
        if (u < acc) return c;
    }
    return w.size() - 1;
}
} // namespace

double WeightAccumulator::draw_mediator(const Eigen::RowVectorXd &basis_row,
                                        std::mt19937_64 &rng) const {
    const std::size_t M = state_->n_inner();
    std::size_t cell = draw_categorical(cell_weights(), rng);
    const auto &tp = state_->theta_params[cell / M][cell % M];
    double idx = dot_m_[cell] + b_m_ + tp.eta_m.dot(basis_row.transpose());
    if (ctx_->schema.mediator_kind == CovariateKind::kBinary)
        return draw_bernoulli(rng, norm_cdf(idx));
    return draw_normal(rng, idx, std::sqrt(tp.sigma2_m));
}

double WeightAccumulator::draw_confounder(const Eigen::RowVectorXd &basis_row,
                                          std::mt19937_64 &rng) const {
    const std::size_t M = state_->n_inner();
    std::size_t cell = draw_categorical(cell_weights(), rng);
    const auto &tp = state_->theta_params[cell / M][cell % M];
    double idx = dot_l_[cell] + b_l_ + tp.eta_l.dot(basis_row.transpose());
    return draw_bernoulli(rng, norm_cdf(idx));
}

WeightAccumulator replay_history(const PosteriorState &state, const ModelContext &ctx,
                                 const History &history) {
    history.validate(ctx.schema);
    WeightAccumulator acc(state, ctx, history.baseline, history.b_m, history.b_l, history.b_z);
    const auto &ages = history.grid.ages;
    for (std::size_t k = 0; k < history.z.size(); ++k)
        acc.add_exposure(ctx.basis.row(ages[k]), history.z[k]);
    for (std::size_t k = 0; k < history.l.size(); ++k)
        acc.add_confounder(ctx.basis.row(ages[k]), history.l[k]);
    for (std::size_t k = 0; k < history.m.size(); ++k)
        acc.add_mediator(ctx.basis.row(ages[k]), history.m[k]);
    return acc;
}

std::vector<double> cluster_weights(const PosteriorState &state, const ModelContext &ctx,
                                    const History &history) {
    return replay_history(state, ctx, history).outer_weights();
}

double conditional_survival(const PosteriorState &state, const ModelContext &ctx,
                            const History &history, double age) {
    double last = 0.0;
    for (std::size_t k = 0; k < std::max({history.z.size(), history.l.size(), history.m.size()});
         ++k)
        last = history.grid.ages[k];
    if (age < last) throw NumericalError("conditional_survival: age precedes the history");
    return replay_history(state, ctx, history).mixture_survival(age);
}

double conditional_mediator_density(const PosteriorState &state, const ModelContext &ctx,
                                    const History &history, double age, double m_value) {
    return replay_history(state, ctx, history).mediator_density(ctx.basis.row(age), m_value);
}

double conditional_confounder_density(const PosteriorState &state, const ModelContext &ctx,
                                      const History &history, double age, double l_value) {
    return replay_history(state, ctx, history).confounder_density(ctx.basis.row(age), l_value);
}

std::vector<double> draw_baseline(const PosteriorState &state, const ModelContext &ctx,
                                  std::mt19937_64 &rng) {
    const std::size_t N = state.n_outer(), M = state.n_inner();
    std::vector<double> joint(N * M);
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t s = 0; s < M; ++s)
            joint[r * M + s] = state.sticks.outer[r] * state.sticks.inner[r][s];
    std::size_t cell = draw_categorical(joint, rng);
    const auto &tp = state.theta_params[cell / M][cell % M];

    std::vector<double> ell0(ctx.n_baseline());
    for (std::size_t p = 0; p < ell0.size(); ++p) {
        const auto &bp = tp.baseline[p];
        if (ctx.schema.baseline_kinds[p] == CovariateKind::kBinary)
            ell0[p] = draw_bernoulli(rng, bp.prob);
        else
            ell0[p] = draw_normal(rng, bp.mean, std::sqrt(bp.var));
    }
    return ell0;
}

} // namespace medsurv
