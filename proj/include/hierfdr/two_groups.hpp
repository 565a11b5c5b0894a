// Two-groups posteriors and the step-down selection rule.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfdr/beta_quadrature.hpp"
#include "hierfdr/numerics.hpp"

namespace hierfdr {

/// Posterior alternative probability under a fixed mixing proportion:
/// lambda f1 / (lambda f1 + (1 - lambda) f0).
inline double posterior_fixed_lambda(double lambda, double f0, double f1) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::domain_error("posterior_fixed_lambda: lambda outside [0,1]");
    if (!(f0 >= 0.0) || !(f1 >= 0.0)) throw std::domain_error("posterior_fixed_lambda: negative density value");
    if (lambda == 0.0) return 0.0;
    const double alt = lambda * f1;
    const double denom = alt + (1.0 - lambda) * f0;
    if (!(denom > 0.0)) {
        if (lambda == 1.0) return 1.0;
        throw std::domain_error("posterior_fixed_lambda: both densities vanish; posterior undefined");
    }
    return alt / denom;
}

/// Posterior under lambda ~ Beta(a, b): the prior average of the fixed-lambda posterior,
/// int lambda f1 / (lambda f1 + (1-lambda) f0) Beta(lambda|a,b) dlambda.
inline double posterior_beta(double a, double b, double f0, double f1, const BetaQuadrature& quad) {
    if (!(f0 >= 0.0) || !(f1 >= 0.0)) throw std::domain_error("posterior_beta: negative density value");
    if (!(f0 + f1 > 0.0)) throw std::domain_error("posterior_beta: both densities vanish; posterior undefined");
    const double w = quad.expectation(a, b, [f0, f1](double lambda) {
        if (lambda == 0.0) return 0.0;
        const double alt = lambda * f1;
        const double denom = alt + (1.0 - lambda) * f0;
        return denom > 0.0 ? alt / denom : 0.0;
    });
    return std::clamp(w, 0.0, 1.0);
}

inline double posterior_beta(double a, double b, double f0, double f1, const UnitIntervalGrid& grid) {
    return posterior_beta(a, b, f0, f1, BetaQuadrature(grid));
}

struct DecisionResult {
    std::vector<std::size_t> order;     // indices by descending posterior, ties by index
    std::vector<std::size_t> rejected;  // first m entries of order
    std::size_t m = 0;
    double expected_fdp = 0.0;
    double alpha = 0.0;
};

/// Descending order of w, stable with respect to the original index.
inline std::vector<std::size_t> descending_order(std::span<const double> w) {
    std::vector<std::size_t> order(w.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return w[l] > w[r]; });
    return order;
}

/// Largest m such that the mean local fdr of the m highest posteriors is at most alpha.
/// Every prefix is checked; the feasible set need not be an interval.
inline DecisionResult select_discoveries(std::span<const double> w, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("select_discoveries: alpha must lie in (0,1)");
    for (double v : w)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("select_discoveries: posterior outside [0,1]");

    DecisionResult res;
    res.alpha = alpha;
    res.order = descending_order(w);
    double cum = 0.0;
    for (std::size_t k = 0; k < res.order.size(); ++k) {
        cum += 1.0 - w[res.order[k]];
        const double fdp = cum / static_cast<double>(k + 1);
        if (fdp <= alpha) {
            res.m = k + 1;
            res.expected_fdp = fdp;
        }
    }
    res.rejected.assign(res.order.begin(), res.order.begin() + static_cast<std::ptrdiff_t>(res.m));
    return res;
}

inline std::vector<bool> rejection_flags(const DecisionResult& d, std::size_t n) {
    std::vector<bool> flags(n, false);
    for (std::size_t i : d.rejected) flags.at(i) = true;
    return flags;
}

inline nlohmann::json to_json(const DecisionResult& d, std::span<const double> w) {
    const auto flags = rejection_flags(d, w.size());
    nlohmann::json tests = nlohmann::json::array();
    for (std::size_t i = 0; i < w.size(); ++i)
        tests.push_back({{"index", i}, {"w", w[i]}, {"rejected", static_cast<bool>(flags[i])}});
    return {{"alpha", d.alpha}, {"m", d.m}, {"expected_fdp", d.expected_fdp}, {"rejected", d.rejected},
            {"tests", tests}};
}

inline void write_csv(std::ostream& os, const DecisionResult& d, std::span<const double> w) {
    const auto flags = rejection_flags(d, w.size());
    os.precision(17);
    os << "index,w,rejected\n";
    for (std::size_t i = 0; i < w.size(); ++i) os << i << ',' << w[i] << ',' << (flags[i] ? 1 : 0) << '\n';
}

}  // namespace hierfdr
