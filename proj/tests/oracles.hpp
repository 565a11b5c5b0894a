// Independent reference computations shared by the unit and acceptance suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

// int_0^1 g(l) Beta(l|a,b) dl with 10^4 nodes. The end segments are integrated after
// the substitution u = l^a (resp. (1-l)^b) so the density singularity disappears.
inline double beta_expectation(double a, double b, const std::function<double(double)>& g,
                               std::size_t n_nodes = 10000) {
    const double log_norm = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double cut = 0.01;
    const std::size_t n_tail = n_nodes / 10;
    const std::size_t n_mid = n_nodes - 2 * n_tail;
    long double total = 0.0L;

    // [0, cut]: l = u^(1/a), dl = (1/a) u^(1/a - 1) du, l^(a-1) dl = du / a
    {
        const double umax = std::pow(cut, a);
        const double h = umax / static_cast<double>(n_tail);
        for (std::size_t k = 0; k < n_tail; ++k) {
            const double u = (static_cast<double>(k) + 0.5) * h;
            const double l = std::pow(u, 1.0 / a);
            const double f = std::exp((b - 1.0) * std::log1p(-l) - log_norm) / a;
            total += static_cast<long double>(g(l) * f * h);
        }
    }
    // [1-cut, 1]: 1-l = v^(1/b)
    {
        const double vmax = std::pow(cut, b);
        const double h = vmax / static_cast<double>(n_tail);
        for (std::size_t k = 0; k < n_tail; ++k) {
            const double v = (static_cast<double>(k) + 0.5) * h;
            const double r = std::pow(v, 1.0 / b);
            const double l = 1.0 - r;
            const double f = std::exp((a - 1.0) * std::log1p(-r) - log_norm) / b;
            total += static_cast<long double>(g(l) * f * h);
        }
    }
    {
        const double h = (1.0 - 2.0 * cut) / static_cast<double>(n_mid);
        for (std::size_t k = 0; k < n_mid; ++k) {
            const double l = cut + (static_cast<double>(k) + 0.5) * h;
            const double f = std::exp((a - 1.0) * std::log(l) + (b - 1.0) * std::log1p(-l) - log_norm);
            total += static_cast<long double>(g(l) * f * h);
        }
    }
    return static_cast<double>(total);
}

inline double posterior_beta(double a, double b, double f0, double f1) {
    return beta_expectation(a, b, [&](double l) { return l * f1 / (l * f1 + (1.0 - l) * f0); });
}

inline double marginal_loglik(double a, double b, double f0, double f1) {
    return std::log(beta_expectation(a, b, [&](double l) { return l * f1 + (1.0 - l) * f0; }));
}

// Benjamini-Hochberg by enumeration: the largest k with at least k p-values <= alpha k / n.
inline std::vector<std::size_t> bh_enumerate(const std::vector<double>& p, double alpha) {
    const std::size_t n = p.size();
    std::size_t best = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double t = alpha * static_cast<double>(k) / static_cast<double>(n);
        std::size_t count = 0;
        for (double v : p) count += v <= t ? 1 : 0;
        if (count >= k) best = k;
    }
    std::vector<std::size_t> out;
    if (best == 0) return out;
    const double t = alpha * static_cast<double>(best) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        if (p[i] <= t) out.push_back(i);
    return out;
}

// Largest prefix of the descending posteriors whose mean local fdr is <= alpha, recomputing
// each prefix mean from scratch.
inline std::size_t prefix_enumerate(const std::vector<double>& w, double alpha) {
    std::vector<std::size_t> order(w.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return w[l] > w[r]; });
    std::size_t best = 0;
    for (std::size_t m = 1; m <= w.size(); ++m) {
        long double s = 0.0L;
        for (std::size_t k = 0; k < m; ++k) s += 1.0L - static_cast<long double>(w[order[k]]);
        if (static_cast<double>(s / static_cast<long double>(m)) <= alpha) best = m;
    }
    return best;
}

// Least squares via the normal equations, solved by Gauss-Jordan with partial pivoting.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& design,
                                            const std::vector<double>& y) {
    const std::size_t p = design.front().size();
    std::vector<std::vector<long double>> m(p, std::vector<long double>(p + 1, 0.0L));
    for (std::size_t r = 0; r < design.size(); ++r)
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) m[i][j] += static_cast<long double>(design[r][i]) * design[r][j];
            m[i][p] += static_cast<long double>(design[r][i]) * y[r];
        }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::fabs(static_cast<double>(m[r][c])) > std::fabs(static_cast<double>(m[piv][c]))) piv = r;
        std::swap(m[c], m[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const long double f = m[r][c] / m[c][c];
            for (std::size_t j = c; j <= p; ++j) m[r][j] -= f * m[c][j];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t i = 0; i < p; ++i) beta[i] = static_cast<double>(m[i][p] / m[i][i]);
    return beta;
}

}  // namespace oracle
