#pragma once

#include <cmath>
#include <limits>

namespace medsurv {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * kLogTwoPi); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

/// log Phi(x), stable over the whole real line. erfc carries the computation
/// down to roughly x = -37; below that the Mills-ratio asymptotic series takes
/// over (erfc underflows to 0 there).
inline double log_norm_cdf(double x) {
    if (x > -37.0) {
        double p = 0.5 * std::erfc(-x * 0.70710678118654752440);
        if (x > 8.0) {
            // Phi(x) ~ 1: log1p on the complement keeps precision.
            return std::log1p(-0.5 * std::erfc(x * 0.70710678118654752440));
        }
        return std::log(p);
    }
    double x2 = x * x;
    double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - 0.5 * kLogTwoPi - std::log(-x) + std::log(series);
}

/// log(1 - Phi(x)) = log Phi(-x).
inline double log_norm_sf(double x) { return log_norm_cdf(-x); }

/// Bernoulli(probit) log-mass: y = 1 -> log Phi(index), y = 0 -> log Phi(-index).
inline double probit_log_mass(int y, double index) {
    return y ? log_norm_cdf(index) : log_norm_cdf(-index);
}

inline double norm_log_pdf(double x, double mean, double var) {
    double z = x - mean;
    return -0.5 * (z * z / var + std::log(var) + kLogTwoPi);
}

/// Inverse standard normal CDF (Acklam's rational approximation with one
/// Halley refinement step; relative error below 1e-13).
inline double norm_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = norm_cdf(x) - p;
    double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

} // namespace medsurv
