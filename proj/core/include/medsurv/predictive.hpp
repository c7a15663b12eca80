#pragma once

#include "medsurv/rng.hpp"
#include "medsurv/state.hpp"

#include <vector>

namespace medsurv {

/// A simulated covariate history on an age grid. The conditioning set of each
/// predictive quantity is exactly the values present: z, l, and m may have
/// different lengths (the mediator typically lags one grid index).
struct History {
    AgeGrid grid;
    std::vector<int> z;
    std::vector<double> l;
    std::vector<double> m;
    std::vector<double> baseline;
    double b_m = 0.0, b_l = 0.0, b_z = 0.0;

    void validate(const CovariateSchema &schema) const;
};

/// Per-(r,s) running log history-products for one simulated individual.
/// Construction charges the stick weights and the baseline-covariate density;
/// appending a value adds its local log density to every cell. All mixture
/// sums happen in log space.
class WeightAccumulator {
  public:
    WeightAccumulator(const PosteriorState &state, const ModelContext &context,
                      std::vector<double> ell0, double b_m, double b_l, double b_z);

    void add_exposure(const Eigen::RowVectorXd &basis_row, int z);
    void add_confounder(const Eigen::RowVectorXd &basis_row, double l);
    void add_mediator(const Eigen::RowVectorXd &basis_row, double m);

    /// Normalized outer-cluster weights w_r (inner sum folded).
    /// Throws NumericalError("degenerate history") if every cell is -inf.
    std::vector<double> outer_weights() const;

    /// Joint (r, s) weights, normalized over all cells.
    std::vector<double> cell_weights() const;

    /// sum_r w_r exp(-Lambda_r(age | l0)).
    double mixture_survival(double age) const;

    double mediator_density(const Eigen::RowVectorXd &basis_row, double m) const;
    double confounder_density(const Eigen::RowVectorXd &basis_row, double l) const;

    double draw_mediator(const Eigen::RowVectorXd &basis_row, std::mt19937_64 &rng) const;
    double draw_confounder(const Eigen::RowVectorXd &basis_row, std::mt19937_64 &rng) const;

    const std::vector<double> &ell0() const { return ell0_; }

  private:
    double cell_mediator_log_density(std::size_t cell, const Eigen::RowVectorXd &basis_row,
                                     double m) const;
    double cell_confounder_log_density(std::size_t cell, const Eigen::RowVectorXd &basis_row,
                                       double l) const;

    const PosteriorState *state_;
    const ModelContext *ctx_;
    std::vector<double> ell0_;
    double b_m_, b_l_, b_z_;
    std::vector<double> cell_lw_;                  // N*M, row-major over (r, s)
    std::vector<double> dot_m_, dot_l_, dot_z_;    // theta . [1, l0] per cell
    std::vector<double> surv_scale_;               // exp(beta_r . l0) per outer cluster
};

/// Outer-cluster weights given a history (Eq.-15 shape), normalized to sum
/// to one; evaluated in log space.
std::vector<double> cluster_weights(const PosteriorState &state, const ModelContext &context,
                                    const History &history);

/// Mixture survival probability at `age` conditional on the history.
/// Requires max(history ages) <= age <= partition upper bound.
double conditional_survival(const PosteriorState &state, const ModelContext &context,
                            const History &history, double age);

/// Mixture density (or mass) of the mediator at `age` given the history; the
/// history's mediator values must lag the grid index of `age`.
double conditional_mediator_density(const PosteriorState &state, const ModelContext &context,
                                    const History &history, double age, double m_value);

double conditional_confounder_density(const PosteriorState &state, const ModelContext &context,
                                      const History &history, double age, double l_value);

/// Algorithm-1 step 2(a): draws one baseline-covariate vector from the
/// mixture sum_r xi_r sum_s xi_{s|r} p(l0; theta_{s|r}).
std::vector<double> draw_baseline(const PosteriorState &state, const ModelContext &context,
                                  std::mt19937_64 &rng);

/// Builds an accumulator and replays the history into it.
WeightAccumulator replay_history(const PosteriorState &state, const ModelContext &context,
                                 const History &history);

} // namespace medsurv
