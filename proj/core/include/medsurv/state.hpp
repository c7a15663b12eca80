#pragma once

#include "medsurv/cohort.hpp"
#include "medsurv/pem.hpp"
#include "medsurv/spline.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace medsurv {

/// Finite truncation of the enriched-Dirichlet-process mixture: N outer
/// (survival-parameter) clusters, M inner (covariate-parameter) clusters each.
struct Truncation {
    std::size_t N = 10;
    std::size_t M = 10;
};

/// Square-breaking weights. Sticks carry the truncation closure (last stick of
/// each level equals 1), so the weights sum to one exactly.
struct StickWeights {
    std::vector<double> outer_sticks;              // xi'_r, length N, xi'_N = 1
    std::vector<std::vector<double>> inner_sticks; // xi'_{s|r}, N x M, xi'_{M|r} = 1
    std::vector<double> outer;                     // xi_r
    std::vector<std::vector<double>> inner;        // xi_{s|r}

    static std::vector<double> weights_from_sticks(const std::vector<double> &sticks);
    void recompute_weights();
};

/// Cluster-specific law of one baseline covariate: Normal(mean, var) when
/// continuous, Bernoulli(prob) when binary.
struct BaselineCovParams {
    double mean = 0.0;
    double var = 1.0;
    double prob = 0.5;
};

/// Inner-cluster parameters: regression (intercept-first) and spline
/// coefficients for the mediator, confounder, and exposure models, the
/// mediator residual variance, and the baseline-covariate laws.
struct ThetaParams {
    Eigen::VectorXd theta_m, theta_l, theta_z; // length 1 + P
    Eigen::VectorXd eta_m, eta_l, eta_z;       // length D
    double sigma2_m = 1.0;
    std::vector<BaselineCovParams> baseline; // length P
};

/// Subject-level intercepts shared across a subject's longitudinal
/// observations; not part of the EDP clustering.
struct RandomEffects {
    std::vector<double> b_m, b_l, b_z;
    double var_m = 1.0, var_l = 1.0, var_z = 1.0;
};

struct ClusterIndex {
    int outer = 0;
    int inner = 0;
    bool operator==(const ClusterIndex &) const = default;
};

/// One Gibbs iteration's full parameter set.
struct PosteriorState {
    Truncation trunc;
    std::vector<ClusterIndex> assignments;              // per subject, 0-based
    StickWeights sticks;
    std::vector<SurvivalParams> beta_params;            // length N
    std::vector<std::vector<ThetaParams>> theta_params; // N x M
    RandomEffects random_effects;
    double alpha_beta = 1.0;
    std::vector<double> alpha_theta; // length N

    std::size_t n_outer() const { return trunc.N; }
    std::size_t n_inner() const { return trunc.M; }
};

/// Chain-level constants shared by the sampler, the predictive mixture, and
/// the G-computation engine.
struct ModelContext {
    CovariateSchema schema;
    SplineBasis basis;
    HazardPartition partition;

    std::size_t n_baseline() const { return schema.n_baseline(); }
    std::size_t spline_dim() const { return basis.dim(); }
};

/// Whole-data fits that center the base measures (Appendix-2 style): one
/// global survival model and one global GLM per longitudinal process.
struct CenteringFit {
    Eigen::VectorXd beta0, beta0_var;     // survival coefficients, length P
    Eigen::VectorXd coef0_m, coef0_m_var; // [intercept, theta, eta], length 1+P+D
    Eigen::VectorXd coef0_l, coef0_l_var;
    Eigen::VectorXd coef0_z, coef0_z_var;
    std::vector<double> base_mean, base_var; // per baseline covariate
};

struct PriorConfig {
    // Prior-inflation constant multiplying centering variances; <= 0 selects n/5.
    double c = 0.0;
    // Baseline-hazard tuning constants; lambda_star <= 0 selects the crude
    // whole-data event rate.
    double lambda_star = 0.0;
    double w = 1.0;
    double w_b_last = 1.0;
    // Gamma hyperparameters for the inner concentration parameters.
    double a_theta = 1.0, b_theta = 1.0;
    // Outer concentration: fixed at alpha_beta unless update_alpha_beta.
    double alpha_beta = 1.0;
    bool update_alpha_beta = false;
    double a_beta = 1.0, b_beta = 1.0;
    // Inverse-gamma (shape, scale) for the mediator residual variance.
    double ig_m_shape = 2.0, ig_m_scale = 0.5;
    // Inverse-gamma (shape, scale) for the random-effect variances.
    double ig_re_shape = 2.0, ig_re_scale = 0.25;
    // Baseline-covariate base measures.
    double base_ig_shape = 2.0; // continuous: sigma^2 ~ IG(shape, scale-from-data)
    double base_beta_a = 1.0, base_beta_b = 1.0; // binary: Beta(a, b)

    CenteringFit centering;
    // Filled by finalize(): per-coefficient prior means/variances.
    Eigen::VectorXd beta_prior_mean, beta_prior_var;
    Eigen::VectorXd m_prior_mean, m_prior_var;
    Eigen::VectorXd l_prior_mean, l_prior_var;
    Eigen::VectorXd z_prior_mean, z_prior_var;
    std::vector<double> base_mu0, base_mu0_var, base_ig_scale; // continuous covariates

    /// Resolves data-dependent defaults (c = n/5, lambda_star, coefficient
    /// prior moments) from the centering fit.
    void finalize(const Cohort &cohort, const ModelContext &context);
    bool finalized() const { return finalized_; }
    bool finalized_ = false;
};

/// Maximum-likelihood whole-data fits seeding the base measures. Throws
/// NumericalError if any fit fails to converge within its iteration cap.
CenteringFit centering_fit(const Cohort &cohort, const ModelContext &context);

// ---------------------------------------------------------------------------
// Local model densities (Eq.-12-style GLMs). The linear index of each process
// is theta . [1, l0] + b + eta . basis_row(age).
// ---------------------------------------------------------------------------

double local_index(const Eigen::VectorXd &theta, const Eigen::VectorXd &eta,
                   const std::vector<double> &ell0, double b, const Eigen::RowVectorXd &basis_row);

double mediator_log_density(const ThetaParams &tp, CovariateKind kind,
                            const std::vector<double> &ell0, double b_m,
                            const Eigen::RowVectorXd &basis_row, double m_value);

double confounder_log_density(const ThetaParams &tp, const std::vector<double> &ell0, double b_l,
                              const Eigen::RowVectorXd &basis_row, double l_value);

double exposure_log_density(const ThetaParams &tp, const std::vector<double> &ell0, double b_z,
                            const Eigen::RowVectorXd &basis_row, int z_value);

double baseline_log_density(const ThetaParams &tp, const CovariateSchema &schema,
                            const std::vector<double> &ell0);

/// delta * log(lambda_b exp(beta l^T)) - Lambda(t): per-subject survival
/// log-density under one outer cluster's parameters.
double survival_log_density(const SurvivalParams &params, const HazardPartition &partition,
                            const std::vector<double> &ell0, double time, int event);

} // namespace medsurv
