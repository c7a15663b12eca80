#pragma once

#include "medsurv/cohort.hpp"

#include <Eigen/Dense>

#include <vector>

namespace medsurv {

/// Penalized thin-plate spline basis on D knots. The raw basis row at age a is
/// {|a - q_1|^3, ..., |a - q_D|^3}; evaluated rows are post-multiplied by the
/// inverse square root of the penalty matrix Omega (entries |q_f - q_g|^3).
///
/// Omega is symmetric but indefinite, so the inverse square root uses the
/// operator absolute value: eigenvalue magnitudes are floored at eigen_floor
/// and mapped through |lambda|^{-1/2}.
class SplineBasis {
  public:
    /// eigen_floor <= 0 selects the default 1e-10 * max|lambda|.
    static SplineBasis make(std::vector<double> knots, double eigen_floor = -1.0);

    std::size_t dim() const { return knots_.size(); }
    const std::vector<double> &knots() const { return knots_; }
    double eigen_floor() const { return eigen_floor_; }
    const Eigen::MatrixXd &penalty() const { return penalty_; }
    const Eigen::MatrixXd &penalty_inv_sqrt() const { return penalty_inv_sqrt_; }

    /// Raw row r_d = |age - q_d|^3 (no transform). Extrapolation permitted.
    Eigen::RowVectorXd raw_row(double age) const;

    /// raw_row(age) * penalty_inv_sqrt.
    Eigen::RowVectorXd row(double age) const;

  private:
    SplineBasis() = default;
    std::vector<double> knots_;
    double eigen_floor_ = 0.0;
    Eigen::MatrixXd penalty_;
    Eigen::MatrixXd penalty_inv_sqrt_;
};

/// Knots at the j/(D+1) quantiles of all pooled landmark ages, j = 1..D.
/// Quantile ties are perturbed by the smallest spacing that restores strict
/// monotonicity. Throws if the cohort has fewer than D distinct landmark ages.
std::vector<double> default_knots(const Cohort &cohort, std::size_t D);

} // namespace medsurv
