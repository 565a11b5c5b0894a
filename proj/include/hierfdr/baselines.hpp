// Benjamini-Hochberg step-up and Storey's adaptive variant.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace hierfdr {

inline void check_pvalues(std::span<const double> p) {
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("p-values must be finite and lie in [0,1]");
}

/// Indices (ascending) rejected by the BH step-up rule at level alpha.
/// Entries tied with the cutoff p-value are all rejected.
inline std::vector<std::size_t> bh(std::span<const double> p, double alpha) {
    check_pvalues(p);
    if (!(alpha > 0.0)) throw std::invalid_argument("bh: alpha must be positive");
    const std::size_t n = p.size();
    std::vector<double> sorted(p.begin(), p.end());
    std::sort(sorted.begin(), sorted.end());
    double cutoff = -1.0;
    for (std::size_t k = n; k >= 1; --k) {
        if (sorted[k - 1] <= static_cast<double>(k) * alpha / static_cast<double>(n)) {
            cutoff = sorted[k - 1];
            break;
        }
    }
    std::vector<std::size_t> out;
    if (cutoff < 0.0) return out;
    for (std::size_t i = 0; i < n; ++i)
        if (p[i] <= cutoff) out.push_back(i);
    return out;
}

/// Storey's null-proportion estimate min(1, #{p > tuning} / ((1 - tuning) n)), floored at 1/n.
inline double storey_pi0(std::span<const double> p, double tuning = 0.5) {
    check_pvalues(p);
    if (!(tuning > 0.0 && tuning < 1.0)) throw std::invalid_argument("storey_pi0: tuning must lie in (0,1)");
    if (p.empty()) return 1.0;
    const double n = static_cast<double>(p.size());
    const auto above = static_cast<double>(std::count_if(p.begin(), p.end(), [tuning](double v) { return v > tuning; }));
    return std::clamp(above / ((1.0 - tuning) * n), 1.0 / n, 1.0);
}

/// BH at the adapted level alpha / pi0_hat.
inline std::vector<std::size_t> storey_bh(std::span<const double> p, double alpha, double tuning = 0.5) {
    return bh(p, alpha / storey_pi0(p, tuning));
}

}  // namespace hierfdr
