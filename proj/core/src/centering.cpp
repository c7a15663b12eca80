#include "medsurv/error.hpp"
#include "medsurv/normal.hpp"
#include "medsurv/state.hpp"

#include <cmath>
#include <limits>

namespace medsurv {

// ---------------------------------------------------------------------------
// Local model densities
// ---------------------------------------------------------------------------

double local_index(const Eigen::VectorXd &theta, const Eigen::VectorXd &eta,
                   const std::vector<double> &ell0, double b, const Eigen::RowVectorXd &basis_row) {
    double v = theta(0) + b;
    for (std::size_t p = 0; p < ell0.size(); ++p) v += theta(static_cast<Eigen::Index>(p + 1)) * ell0[p];
    v += eta.dot(basis_row.transpose());
    return v;
}

double mediator_log_density(const ThetaParams &tp, CovariateKind kind,
                            const std::vector<double> &ell0, double b_m,
                            const Eigen::RowVectorXd &basis_row, double m_value) {
    double idx = local_index(tp.theta_m, tp.eta_m, ell0, b_m, basis_row);
    if (kind == CovariateKind::kBinary) return probit_log_mass(m_value != 0.0, idx);
    return norm_log_pdf(m_value, idx, tp.sigma2_m);
}

double confounder_log_density(const ThetaParams &tp, const std::vector<double> &ell0, double b_l,
                              const Eigen::RowVectorXd &basis_row, double l_value) {
    double idx = local_index(tp.theta_l, tp.eta_l, ell0, b_l, basis_row);
    return probit_log_mass(l_value != 0.0, idx);
}

double exposure_log_density(const ThetaParams &tp, const std::vector<double> &ell0, double b_z,
                            const Eigen::RowVectorXd &basis_row, int z_value) {
    double idx = local_index(tp.theta_z, tp.eta_z, ell0, b_z, basis_row);
    return probit_log_mass(z_value, idx);
}

double baseline_log_density(const ThetaParams &tp, const CovariateSchema &schema,
                            const std::vector<double> &ell0) {
    double ll = 0.0;
    for (std::size_t p = 0; p < ell0.size(); ++p) {
        const auto &bp = tp.baseline[p];
        if (schema.baseline_kinds[p] == CovariateKind::kBinary)
            ll += ell0[p] != 0.0 ? std::log(bp.prob) : std::log(1.0 - bp.prob);
        else
            ll += norm_log_pdf(ell0[p], bp.mean, bp.var);
    }
    return ll;
}

double survival_log_density(const SurvivalParams &params, const HazardPartition &partition,
                            const std::vector<double> &ell0, double time, int event) {
    double ll = -cumulative_hazard(params, partition, ell0, time);
    if (event == 1) {
        const std::size_t b = partition.interval_of(time);
        if (params.lambdas[b - 1] <= 0.0) return -std::numeric_limits<double>::infinity();
        double lin = 0.0;
        for (std::size_t p = 0; p < ell0.size(); ++p) lin += params.betas[p] * ell0[p];
        ll += std::log(params.lambdas[b - 1]) + lin;
    }
    return ll;
}

// ---------------------------------------------------------------------------
// Whole-data centering fits
// ---------------------------------------------------------------------------

namespace {

constexpr double kRidge = 1e-4;
constexpr int kMaxNewton = 100;

Eigen::MatrixXd design_row_matrix(const Cohort &cohort, const ModelContext &ctx) {
    // One row per landmark: [1, l0, basis_row(age)].
    std::size_t rows = 0;
    for (const auto &s : cohort.subjects) rows += s.landmarks.size();
    const auto P = static_cast<Eigen::Index>(ctx.n_baseline());
    const auto D = static_cast<Eigen::Index>(ctx.spline_dim());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), 1 + P + D);
    Eigen::Index r = 0;
    for (const auto &s : cohort.subjects)
        for (const auto &lm : s.landmarks) {
            X(r, 0) = 1.0;
            for (Eigen::Index p = 0; p < P; ++p) X(r, 1 + p) = s.baseline[static_cast<std::size_t>(p)];
            X.row(r).segment(1 + P, D) = ctx.basis.row(lm.age);
            ++r;
        }
    return X;
}

Eigen::VectorXd gather_landmark_values(const Cohort &cohort, char which) {
    std::vector<double> vals;
    for (const auto &s : cohort.subjects)
        for (const auto &lm : s.landmarks)
            vals.push_back(which == 'm' ? lm.m : which == 'l' ? lm.l : static_cast<double>(lm.z));
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

struct FitResult {
    Eigen::VectorXd coef;
    Eigen::VectorXd var;
};

FitResult ols_fit(const Eigen::MatrixXd &X, const Eigen::VectorXd &y) {
    const Eigen::Index q = X.cols();
    Eigen::MatrixXd xtx = X.transpose() * X + kRidge * Eigen::MatrixXd::Identity(q, q);
    Eigen::LDLT<Eigen::MatrixXd> solver(xtx);
    Eigen::VectorXd coef = solver.solve(X.transpose() * y);
    double dof = std::max<double>(1.0, static_cast<double>(X.rows()) - static_cast<double>(q));
    double sigma2 = (y - X * coef).squaredNorm() / dof;
    sigma2 = std::max(sigma2, 1e-12);
    Eigen::MatrixXd cov = sigma2 * solver.solve(Eigen::MatrixXd::Identity(q, q));
    return {coef, cov.diagonal()};
}

/// Probit MAP fit with a weak ridge; finite even under complete separation.
/// Fitted probabilities are clamped to [1e-6, 1 - 1e-6] inside the weights.
FitResult probit_fit(const Eigen::MatrixXd &X, const Eigen::VectorXd &y) {
    const Eigen::Index q = X.cols();
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(q);
    for (int it = 0; it < kMaxNewton; ++it) {
        Eigen::VectorXd eta = X * coef;
        Eigen::VectorXd score = Eigen::VectorXd::Zero(q);
        Eigen::MatrixXd info = kRidge * Eigen::MatrixXd::Identity(q, q);
        score -= kRidge * coef;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            double p = norm_cdf(eta(i));
            p = std::min(1.0 - 1e-6, std::max(1e-6, p));
            double phi = norm_pdf(eta(i));
            double w = phi * phi / (p * (1.0 - p));
            score += X.row(i).transpose() * (phi * (y(i) - p) / (p * (1.0 - p)));
            info += w * X.row(i).transpose() * X.row(i);
        }
        Eigen::LDLT<Eigen::MatrixXd> solver(info);
        Eigen::VectorXd step = solver.solve(score);
        // Damp long steps; keeps separated fits from overshooting.
        double norm = step.cwiseAbs().maxCoeff();
        if (norm > 2.0) step *= 2.0 / norm;
        coef += step;
        if (norm < 1e-10 || score.cwiseAbs().maxCoeff() < 1e-8) {
            Eigen::MatrixXd cov = solver.solve(Eigen::MatrixXd::Identity(q, q));
            return {coef, cov.diagonal()};
        }
    }
    throw NumericalError("centering fit: probit regression did not converge");
}

/// Poisson GLM on the expanded survival data: parameters (log lambda_1..B,
/// beta_1..P), offset log H. Concave; Newton with observed information.
FitResult pem_fit(const Cohort &cohort, const ModelContext &ctx) {
    const std::size_t B = ctx.partition.intervals();
    const auto P = static_cast<Eigen::Index>(ctx.n_baseline());
    const auto q = static_cast<Eigen::Index>(B) + P;

    struct Cell {
        std::size_t interval;
        double n, log_h;
        const std::vector<double> *ell0;
    };
    std::vector<Cell> cells;
    double events = 0.0, exposure = 0.0;
    for (const auto &s : cohort.subjects) {
        const std::size_t bi = ctx.partition.interval_of(s.event_age);
        for (std::size_t b = 1; b <= bi; ++b) {
            double lo = ctx.partition.cutpoints[b - 1];
            double hi = ctx.partition.cutpoints[b];
            double h = b < bi ? hi - lo : s.event_age - lo;
            if (h <= 0.0) continue;
            double n = (b == bi && s.event_indicator == 1) ? 1.0 : 0.0;
            cells.push_back({b, n, std::log(h), &s.baseline});
            events += n;
            exposure += h;
        }
    }
    if (exposure <= 0.0) throw NumericalError("centering fit: no follow-up exposure");

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(q);
    double base = std::log(std::max(events, 0.5) / exposure);
    for (std::size_t b = 0; b < B; ++b) coef(static_cast<Eigen::Index>(b)) = base;

    for (int it = 0; it < kMaxNewton; ++it) {
        Eigen::VectorXd score = -kRidge * coef;
        Eigen::MatrixXd info = kRidge * Eigen::MatrixXd::Identity(q, q);
        for (const auto &cell : cells) {
            double lin = coef(static_cast<Eigen::Index>(cell.interval - 1)) + cell.log_h;
            for (Eigen::Index p = 0; p < P; ++p)
                lin += coef(static_cast<Eigen::Index>(B) + p) * (*cell.ell0)[static_cast<std::size_t>(p)];
            double mu = std::exp(std::min(lin, 30.0));
            Eigen::VectorXd x = Eigen::VectorXd::Zero(q);
            x(static_cast<Eigen::Index>(cell.interval - 1)) = 1.0;
            for (Eigen::Index p = 0; p < P; ++p)
                x(static_cast<Eigen::Index>(B) + p) = (*cell.ell0)[static_cast<std::size_t>(p)];
            score += x * (cell.n - mu);
            info += mu * x * x.transpose();
        }
        Eigen::LDLT<Eigen::MatrixXd> solver(info);
        Eigen::VectorXd step = solver.solve(score);
        double norm = step.cwiseAbs().maxCoeff();
        if (norm > 2.0) step *= 2.0 / norm;
        coef += step;
        if (norm < 1e-10 || score.cwiseAbs().maxCoeff() < 1e-8) {
            Eigen::MatrixXd cov = solver.solve(Eigen::MatrixXd::Identity(q, q));
            return {coef, cov.diagonal()};
        }
    }
    throw NumericalError("centering fit: survival model did not converge");
}

} // namespace

CenteringFit centering_fit(const Cohort &cohort, const ModelContext &ctx) {
    CenteringFit fit;
    const std::size_t B = ctx.partition.intervals();
    const auto P = static_cast<Eigen::Index>(ctx.n_baseline());

    FitResult surv = pem_fit(cohort, ctx);
    fit.beta0 = surv.coef.segment(static_cast<Eigen::Index>(B), P);
    fit.beta0_var = surv.var.segment(static_cast<Eigen::Index>(B), P);

    Eigen::MatrixXd X = design_row_matrix(cohort, ctx);
    if (X.rows() == 0) throw DataError("centering fit: cohort has no landmarks");

    Eigen::VectorXd m = gather_landmark_values(cohort, 'm');
    if (ctx.schema.mediator_kind == CovariateKind::kContinuous) {
        FitResult r = ols_fit(X, m);
        fit.coef0_m = r.coef;
        fit.coef0_m_var = r.var;
    } else {
        FitResult r = probit_fit(X, m);
        fit.coef0_m = r.coef;
        fit.coef0_m_var = r.var;
    }
    {
        FitResult r = probit_fit(X, gather_landmark_values(cohort, 'l'));
        fit.coef0_l = r.coef;
        fit.coef0_l_var = r.var;
    }
    {
        FitResult r = probit_fit(X, gather_landmark_values(cohort, 'z'));
        fit.coef0_z = r.coef;
        fit.coef0_z_var = r.var;
    }

    const double n = static_cast<double>(cohort.size());
    for (Eigen::Index p = 0; p < P; ++p) {
        double mean = 0.0, sq = 0.0;
        for (const auto &s : cohort.subjects) mean += s.baseline[static_cast<std::size_t>(p)];
        mean /= n;
        for (const auto &s : cohort.subjects) {
            double d = s.baseline[static_cast<std::size_t>(p)] - mean;
            sq += d * d;
        }
        double var = n > 1 ? sq / (n - 1.0) : 1.0;
        fit.base_mean.push_back(mean);
        fit.base_var.push_back(std::max(var, 1e-8));
    }
    return fit;
}

void PriorConfig::finalize(const Cohort &cohort, const ModelContext &ctx) {
    if (centering.beta0.size() == 0) {
        if (cohort.subjects.empty())
            throw ConfigError("empty cohort: centering estimates must be supplied explicitly");
        centering = centering_fit(cohort, ctx);
    }
    const double n = static_cast<double>(cohort.size());
    if (c <= 0.0) c = n / 5.0;
    if (c <= 1.0) c = 1.0 + 1e-6; // prior inflation requires c > 1

    if (lambda_star <= 0.0) {
        double events = 0.0, exposure = 0.0;
        for (const auto &s : cohort.subjects) {
            events += s.event_indicator;
            exposure += s.event_age;
        }
        lambda_star = exposure > 0.0 ? std::max(events, 0.5) / exposure : 1.0;
    }

    beta_prior_mean = centering.beta0;
    beta_prior_var = c * centering.beta0_var;
    m_prior_mean = centering.coef0_m;
    m_prior_var = c * centering.coef0_m_var;
    l_prior_mean = centering.coef0_l;
    l_prior_var = c * centering.coef0_l_var;
    z_prior_mean = centering.coef0_z;
    z_prior_var = c * centering.coef0_z_var;

    base_mu0.clear();
    base_mu0_var.clear();
    base_ig_scale.clear();
    for (std::size_t p = 0; p < ctx.n_baseline(); ++p) {
        base_mu0.push_back(centering.base_mean[p]);
        base_mu0_var.push_back(c * centering.base_var[p] / n);
        base_ig_scale.push_back(centering.base_var[p]);
    }
    finalized_ = true;
}

} // namespace medsurv
