// Special functions, quadrature grids and probability primitives.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace hierfdr {

/// Location/scale of the Gaussian null density f0.
struct NullParams {
    double mu = 0.0;
    double sigma = 1.0;

    void validate() const {
        if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0))
            throw std::invalid_argument("NullParams: mu must be finite and sigma finite and positive");
    }
};

inline double normal_logpdf(double x, const NullParams& params) {
    if (!std::isfinite(x)) throw std::invalid_argument("normal_pdf: non-finite argument");
    const double u = (x - params.mu) / params.sigma;
    return -0.5 * u * u - std::log(params.sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double normal_pdf(double x, const NullParams& params) {
    if (!std::isfinite(x)) throw std::invalid_argument("normal_pdf: non-finite argument");
    const double u = (x - params.mu) / params.sigma;
    return std::exp(-0.5 * u * u) / (params.sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// glibc's lgamma writes the global signgam; use the reentrant variant there.
inline double log_gamma(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

/// log B(a, b).
inline double log_beta_fn(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

inline double log_beta_pdf(double lambda, double a, double b) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::domain_error("log_beta_pdf: lambda must lie in (0,1)");
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("log_beta_pdf: shape parameters must be positive");
    return (a - 1.0) * std::log(lambda) + (b - 1.0) * std::log1p(-lambda) - log_beta_fn(a, b);
}

/// Digamma via upward recurrence to x >= 6 followed by the asymptotic series.
inline double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("digamma: argument must be positive and finite");
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli-number coefficients B_{2k}/(2k).
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

/// Quadrature grid on (0,1): ordered interior nodes with positive weights summing to one.
struct UnitIntervalGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    void validate() const {
        if (nodes.size() < 2 || nodes.size() != weights.size())
            throw std::invalid_argument("UnitIntervalGrid: need at least two nodes with one weight each");
        double total = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!(nodes[i] > 0.0 && nodes[i] < 1.0)) throw std::invalid_argument("UnitIntervalGrid: node outside (0,1)");
            if (i > 0 && !(nodes[i] > nodes[i - 1])) throw std::invalid_argument("UnitIntervalGrid: nodes not increasing");
            if (!(weights[i] > 0.0)) throw std::invalid_argument("UnitIntervalGrid: nonpositive weight");
            total += weights[i];
        }
        if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("UnitIntervalGrid: weights do not sum to one");
    }
};

/// Midpoint rule with n equal cells.
inline UnitIntervalGrid make_lambda_grid(std::size_t n_nodes = 100) {
    if (n_nodes < 2) throw std::invalid_argument("make_lambda_grid: need at least two nodes");
    UnitIntervalGrid grid;
    grid.nodes.resize(n_nodes);
    grid.weights.assign(n_nodes, 1.0 / static_cast<double>(n_nodes));
    for (std::size_t i = 0; i < n_nodes; ++i)
        grid.nodes[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n_nodes);
    return grid;
}

/// Support points for the signal shift tau; integrals use the trapezoid rule.
struct RealLineGrid {
    std::vector<double> nodes;

    std::size_t size() const { return nodes.size(); }

    void validate() const {
        if (nodes.size() < 2) throw std::invalid_argument("RealLineGrid: need at least two nodes");
        for (std::size_t i = 1; i < nodes.size(); ++i)
            if (!(nodes[i] > nodes[i - 1])) throw std::invalid_argument("RealLineGrid: nodes not increasing");
    }

    /// Trapezoid weights such that sum(w_j f_j) approximates the integral.
    std::vector<double> trapezoid_weights() const {
        std::vector<double> w(nodes.size(), 0.0);
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            const double half = 0.5 * (nodes[i] - nodes[i - 1]);
            w[i - 1] += half;
            w[i] += half;
        }
        return w;
    }

    double trapezoid(std::span<const double> values) const {
        if (values.size() != nodes.size()) throw std::invalid_argument("RealLineGrid::trapezoid: size mismatch");
        double total = 0.0;
        for (std::size_t i = 1; i < nodes.size(); ++i)
            total += 0.5 * (nodes[i] - nodes[i - 1]) * (values[i] + values[i - 1]);
        return total;
    }
};

/// Equally spaced tau grid on [-half_width*sigma, half_width*sigma]; tau is a shift relative to mu.
inline RealLineGrid make_tau_grid(const NullParams& null, std::size_t n_nodes = 201, double half_width = 10.0) {
    null.validate();
    if (n_nodes < 2) throw std::invalid_argument("make_tau_grid: need at least two nodes");
    RealLineGrid grid;
    grid.nodes.resize(n_nodes);
    const double lo = -half_width * null.sigma;
    const double step = 2.0 * half_width * null.sigma / static_cast<double>(n_nodes - 1);
    for (std::size_t i = 0; i < n_nodes; ++i) grid.nodes[i] = lo + step * static_cast<double>(i);
    // exact symmetry about zero
    for (std::size_t i = 0; i < n_nodes / 2; ++i) {
        const double m = 0.5 * (grid.nodes[n_nodes - 1 - i] - grid.nodes[i]);
        grid.nodes[i] = -m;
        grid.nodes[n_nodes - 1 - i] = m;
    }
    if (n_nodes % 2 == 1) grid.nodes[n_nodes / 2] = 0.0;
    return grid;
}

inline constexpr double kPFloor = 1e-15;

/// Inverse-normal transform of a p-value. One-sided: z = Phi^-1(1-p).
/// Two-sided: z = Phi^-1(1-p/2) >= 0 (the sign of the effect is not recoverable from p).
/// p is clamped to [1e-15, 1-1e-15] so the result stays finite.
inline double p_to_z(double p, bool two_sided) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p_to_z: p must lie in (0,1]");
    const boost::math::normal_distribution<double> std_normal;
    double tail = two_sided ? 0.5 * p : p;
    tail = std::clamp(tail, kPFloor, 1.0 - kPFloor);
    return -boost::math::quantile(std_normal, tail);
}

/// p-value of a z statistic under N(0,1): two-sided 2*(1-Phi(|z|)), one-sided 1-Phi(z).
inline double z_to_p(double z, bool two_sided) {
    if (!std::isfinite(z)) throw std::invalid_argument("z_to_p: non-finite statistic");
    if (two_sided) return std::min(1.0, std::erfc(std::abs(z) / std::numbers::sqrt2));
    return normal_cdf(-z);
}

}  // namespace hierfdr
