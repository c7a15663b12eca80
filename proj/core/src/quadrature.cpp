#include "medsurv/error.hpp"
#include "medsurv/predictive.hpp"
#include "medsurv/synthetic.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace medsurv {

void gauss_hermite_normal(std::size_t n, double mean, double var, std::vector<double> &nodes,
                          std::vector<double> &weights) {
    // Golub-Welsch on the Hermite Jacobi matrix (weight exp(-x^2)), then the
    // change of variables x = mean + sqrt(2 var) t.
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index i = 0; i + 1 < N; ++i) {
        double off = std::sqrt(0.5 * static_cast<double>(i + 1));
        J(i, i + 1) = off;
        J(i + 1, i) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    if (eig.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigensolve failed");
    nodes.resize(n);
    weights.resize(n);
    const double sd = std::sqrt(2.0 * var);
    for (Eigen::Index i = 0; i < N; ++i) {
        nodes[static_cast<std::size_t>(i)] = mean + sd * eig.eigenvalues()(i);
        double v0 = eig.eigenvectors()(0, i);
        weights[static_cast<std::size_t>(i)] = v0 * v0; // sqrt(pi) v0^2 / sqrt(pi)
    }
}

namespace {

struct WeightedPoint {
    std::vector<double> values;
    double weight = 1.0;
};

/// Cartesian product of per-dimension weighted grids.
std::vector<WeightedPoint> product_grid(const std::vector<std::vector<double>> &node_sets,
                                        const std::vector<std::vector<double>> &weight_sets) {
    std::vector<WeightedPoint> points{{std::vector<double>{}, 1.0}};
    for (std::size_t d = 0; d < node_sets.size(); ++d) {
        std::vector<WeightedPoint> next;
        next.reserve(points.size() * node_sets[d].size());
        for (const auto &pt : points)
            for (std::size_t j = 0; j < node_sets[d].size(); ++j) {
                WeightedPoint np = pt;
                np.values.push_back(node_sets[d][j]);
                np.weight *= weight_sets[d][j];
                next.push_back(std::move(np));
            }
        points = std::move(next);
    }
    return points;
}

/// Baseline-covariate integration points for one mixture cell: binary
/// covariates enumerated exactly, continuous ones by Gauss-Hermite.
std::vector<WeightedPoint> baseline_points(const ThetaParams &tp, const CovariateSchema &schema,
                                           std::size_t gh_nodes) {
    std::vector<std::vector<double>> nodes(schema.n_baseline());
    std::vector<std::vector<double>> weights(schema.n_baseline());
    for (std::size_t p = 0; p < schema.n_baseline(); ++p) {
        if (schema.baseline_kinds[p] == CovariateKind::kBinary) {
            nodes[p] = {0.0, 1.0};
            weights[p] = {1.0 - tp.baseline[p].prob, tp.baseline[p].prob};
        } else {
            gauss_hermite_normal(gh_nodes, tp.baseline[p].mean, tp.baseline[p].var, nodes[p],
                                 weights[p]);
        }
    }
    return product_grid(nodes, weights);
}

} // namespace

double truth_by_quadrature(const TrueModel &model, const GCompConfig &config, const Regime &z1,
                           const Regime &z2, const QuadratureSpec &spec) {
    model.validate();
    config.validate();
    const auto &ctx = model.context;
    const auto &state = model.params;
    const std::size_t K = config.grid.size();
    const std::size_t N = state.n_outer(), M = state.n_inner();

    if (ctx.schema.mediator_kind != CovariateKind::kBinary)
        throw ConfigError("quadrature truth: mediator must be binary");
    if (K > 3) throw ConfigError("quadrature truth: grid limited to K <= 3");
    if (N * M > 16) throw ConfigError("quadrature truth: at most 16 mixture cells");
    std::size_t n_cont = 0;
    for (auto kind : ctx.schema.baseline_kinds)
        if (kind == CovariateKind::kContinuous) ++n_cont;
    if (n_cont > 2)
        throw ConfigError("quadrature truth: at most two continuous baseline covariates");

    std::vector<Eigen::RowVectorXd> rows;
    for (double a : config.grid.ages) rows.push_back(ctx.basis.row(a));

    // Random-intercept integration collapses to the zero point when the
    // mixture has a single cell: the path densities then sum to one over the
    // exhaustive enumeration, and the survival factors do not involve b.
    const bool single_cell = N * M == 1;
    std::vector<double> b_nodes{0.0}, b_weights{1.0};
    std::vector<std::vector<double>> b_node_sets(3, b_nodes), b_weight_sets(3, b_weights);
    if (!single_cell) {
        const auto &re = state.random_effects;
        gauss_hermite_normal(spec.gh_nodes, 0.0, re.var_m, b_node_sets[0], b_weight_sets[0]);
        gauss_hermite_normal(spec.gh_nodes, 0.0, re.var_l, b_node_sets[1], b_weight_sets[1]);
        gauss_hermite_normal(spec.gh_nodes, 0.0, re.var_z, b_node_sets[2], b_weight_sets[2]);
    }
    auto b_points = product_grid(b_node_sets, b_weight_sets);

    const std::size_t n_paths = static_cast<std::size_t>(1) << (2 * K);
    const bool same_regime = z1 == z2;

    double numerator = 0.0, denominator = 0.0;

    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t s = 0; s < M; ++s) {
            double cell_weight = state.sticks.outer[r] * state.sticks.inner[r][s];
            if (cell_weight <= 0.0) continue;
            auto ell0_points = baseline_points(state.theta_params[r][s], ctx.schema, spec.gh_nodes);
            for (const auto &l0p : ell0_points) {
                for (const auto &bp : b_points) {
                    const double b_m = bp.values[0], b_l = bp.values[1], b_z = bp.values[2];
                    double point_weight = cell_weight * l0p.weight * bp.weight;

                    for (std::size_t path = 0; path < n_paths; ++path) {
                        WeightAccumulator acc1(state, ctx, l0p.values, b_m, b_l, b_z);
                        WeightAccumulator acc2 = acc1;
                        double prod = 1.0;
                        for (std::size_t k = 0; k < K; ++k) {
                            double l_k = static_cast<double>((path >> (2 * k)) & 1);
                            double m_k = static_cast<double>((path >> (2 * k + 1)) & 1);

                            prod *= acc1.mixture_survival(config.grid.ages[k]);
                            acc1.add_exposure(rows[k], z1.values[k]);
                            if (!same_regime) acc2.add_exposure(rows[k], z2.values[k]);

                            prod *= acc1.confounder_density(rows[k], l_k);
                            acc1.add_confounder(rows[k], l_k);
                            if (!same_regime) acc2.add_confounder(rows[k], l_k);

                            prod *= (same_regime ? acc1 : acc2).mediator_density(rows[k], m_k);
                            acc1.add_mediator(rows[k], m_k);
                            if (!same_regime) acc2.add_mediator(rows[k], m_k);
                        }
                        double p_a = acc1.mixture_survival(config.target_age);
                        numerator += point_weight * prod * p_a;
                        denominator += point_weight * prod;
                    }
                }
            }
        }

    if (denominator <= 0.0) throw NumericalError("quadrature truth: vanishing path mass");
    return numerator / denominator;
}

} // namespace medsurv
