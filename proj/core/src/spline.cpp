#include "medsurv/spline.hpp"
#include "medsurv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace medsurv {

SplineBasis SplineBasis::make(std::vector<double> knots, double eigen_floor) {
    if (knots.size() < 2) throw ConfigError("spline basis needs at least 2 knots");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (knots[i] == knots[i - 1]) throw ConfigError("duplicate knots");
        if (knots[i] < knots[i - 1]) throw ConfigError("knots must be sorted increasing");
    }
    const auto D = static_cast<Eigen::Index>(knots.size());

    Eigen::MatrixXd omega(D, D);
    for (Eigen::Index f = 0; f < D; ++f)
        for (Eigen::Index g = 0; g < D; ++g) {
            double d = std::abs(knots[static_cast<std::size_t>(f)] -
                                knots[static_cast<std::size_t>(g)]);
            omega(f, g) = d * d * d;
        }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega);
    if (eig.info() != Eigen::Success) throw NumericalError("penalty eigendecomposition failed");
    Eigen::VectorXd lambda = eig.eigenvalues();
    Eigen::MatrixXd vectors = eig.eigenvectors();

    // Sign convention: largest-magnitude entry of each eigenvector positive,
    // so the inverse square root is reproducible bit-for-bit.
    for (Eigen::Index j = 0; j < D; ++j) {
        Eigen::Index imax = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&imax);
        if (vectors(imax, j) < 0.0) vectors.col(j) = -vectors.col(j);
    }

    double max_abs = lambda.cwiseAbs().maxCoeff();
    double floor = eigen_floor > 0.0 ? eigen_floor : 1e-10 * max_abs;

    Eigen::VectorXd inv_sqrt(D);
    for (Eigen::Index j = 0; j < D; ++j)
        inv_sqrt(j) = 1.0 / std::sqrt(std::max(std::abs(lambda(j)), floor));

    SplineBasis basis;
    basis.knots_ = std::move(knots);
    basis.eigen_floor_ = floor;
    basis.penalty_ = std::move(omega);
    basis.penalty_inv_sqrt_ = vectors * inv_sqrt.asDiagonal() * vectors.transpose();
    // Symmetrize away rounding asymmetry from the triple product.
    basis.penalty_inv_sqrt_ = 0.5 * (basis.penalty_inv_sqrt_ + basis.penalty_inv_sqrt_.transpose()).eval();
    return basis;
}

Eigen::RowVectorXd SplineBasis::raw_row(double age) const {
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(knots_.size()));
    for (std::size_t d = 0; d < knots_.size(); ++d) {
        double u = std::abs(age - knots_[d]);
        r(static_cast<Eigen::Index>(d)) = u * u * u;
    }
    return r;
}

Eigen::RowVectorXd SplineBasis::row(double age) const { return raw_row(age) * penalty_inv_sqrt_; }

std::vector<double> default_knots(const Cohort &cohort, std::size_t D) {
    if (D < 2) throw ConfigError("default_knots: D must be >= 2");
    std::vector<double> ages;
    for (const auto &s : cohort.subjects)
        for (const auto &lm : s.landmarks) ages.push_back(lm.age);
    std::sort(ages.begin(), ages.end());
    std::set<double> distinct(ages.begin(), ages.end());
    if (distinct.size() < D)
        throw DataError("default_knots: fewer distinct landmark ages than requested knots");

    // Type-7 empirical quantiles at j/(D+1).
    std::vector<double> knots;
    const double n = static_cast<double>(ages.size());
    for (std::size_t j = 1; j <= D; ++j) {
        double p = static_cast<double>(j) / static_cast<double>(D + 1);
        double h = (n - 1.0) * p;
        auto lo = static_cast<std::size_t>(std::floor(h));
        auto hi = std::min(lo + 1, ages.size() - 1);
        double frac = h - std::floor(h);
        knots.push_back(ages[lo] * (1.0 - frac) + ages[hi] * frac);
    }

    // De-duplicate: push ties apart by the smallest positive spacing seen in
    // the pooled ages (strict monotonicity is all the basis requires).
    double min_gap = std::numeric_limits<double>::infinity();
    double prev = ages.front();
    for (double a : ages) {
        if (a > prev) min_gap = std::min(min_gap, a - prev);
        prev = a;
    }
    if (!std::isfinite(min_gap)) min_gap = 1.0;
    for (std::size_t j = 1; j < knots.size(); ++j)
        if (knots[j] <= knots[j - 1]) knots[j] = knots[j - 1] + min_gap / static_cast<double>(D);
    return knots;
}

} // namespace medsurv
