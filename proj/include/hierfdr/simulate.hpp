// Synthetic benchmark data with known ground truth: three prior scenarios crossed with two
// alternative densities.
//
//   covariates   X ~ N(0, I_k)
//   prior        constant:  P(h=1|X) = 0.5
//                linear:    sigmoid(X beta),                         beta_j ~ N(0,1)
//                nonlinear: sigmoid(s(v) + c),  s(v) = g (sin(v) + v^2/2 - 1),  v = r X beta / sqrt(k),
//                           r = nonlinear_scale, g = nonlinear_gain, c chosen so the average prior is `nonlinear_fraction`
//   auxiliary    X_aux[:, j] = w_j * L + |w_j| * e_j,  L the standardized prior logit,
//                w_j ~ N(0,1), e_j ~ N(0,1) (pure noise when the prior is constant)
//   statistics   z | h=0 ~ N(0,1);  z | h=1 ~ 0.5 N(-2.5,1) + 0.5 N(2.5,1) (ws) or N(0, ps_sd^2) (ps)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hierfdr/matrix.hpp"
#include "hierfdr/mlp.hpp"
#include "hierfdr/random.hpp"

namespace hierfdr {

enum class PriorKind { constant, linear, nonlinear };
enum class AltKind { well_separated, poorly_separated };

inline std::string to_string(PriorKind k) {
    switch (k) {
        case PriorKind::constant: return "constant";
        case PriorKind::linear: return "linear";
        case PriorKind::nonlinear: return "nonlinear";
    }
    return "?";
}

inline std::string to_string(AltKind k) { return k == AltKind::well_separated ? "ws" : "ps"; }

inline PriorKind parse_prior_kind(std::string_view s) {
    if (s == "constant") return PriorKind::constant;
    if (s == "linear") return PriorKind::linear;
    if (s == "nonlinear") return PriorKind::nonlinear;
    throw std::invalid_argument("unknown prior scenario '" + std::string(s) + "' (expected constant, linear or nonlinear)");
}

inline AltKind parse_alt_kind(std::string_view s) {
    if (s == "ws" || s == "well_separated") return AltKind::well_separated;
    if (s == "ps" || s == "poorly_separated") return AltKind::poorly_separated;
    throw std::invalid_argument("unknown alternative '" + std::string(s) + "' (expected ws or ps)");
}

struct ScenarioConfig {
    PriorKind prior = PriorKind::linear;
    AltKind alt = AltKind::well_separated;
    std::size_t n = 1000;
    std::size_t k = 100;
    std::size_t q = 5;
    std::uint64_t seed = 0;
    double ps_sd = 3.0;
    double nonlinear_fraction = 0.3;
    double nonlinear_scale = 0.5;  // multiplies the standardized linear form
    double nonlinear_gain = 10.0;  // amplitude of the nonlinear logit

    std::string name() const { return to_string(prior) + "_" + to_string(alt); }
};

struct SyntheticDataset {
    std::vector<double> z;
    Matrix x;
    Matrix x_aux;
    std::vector<bool> h;
    std::vector<double> prior_prob;
    std::vector<double> prior_logit;

    std::size_t size() const { return z.size(); }
};

namespace detail {

inline std::vector<double> nonlinear_shape(std::span<const double> v) {
    std::vector<double> s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s[i] = std::sin(v[i]) + 0.5 * v[i] * v[i] - 1.0;
    return s;
}

/// Offset c such that mean(sigmoid(s + c)) == target (bisection; the mean is increasing in c).
inline double offset_for_fraction(std::span<const double> s, double target) {
    auto mean_prob = [&](double c) {
        double m = 0.0;
        for (double v : s) m += sigmoid(v + c);
        return m / static_cast<double>(s.size());
    };
    const auto [s_min, s_max] = std::minmax_element(s.begin(), s.end());
    double lo = -*s_max - 50.0, hi = -*s_min + 50.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_prob(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline SyntheticDataset generate(const ScenarioConfig& cfg) {
    if (cfg.n == 0) throw std::invalid_argument("generate: n must be positive");
    if (!(cfg.ps_sd > 0.0)) throw std::invalid_argument("generate: ps_sd must be positive");
    if (!(cfg.nonlinear_fraction > 0.0 && cfg.nonlinear_fraction < 1.0))
        throw std::invalid_argument("generate: nonlinear_fraction must lie in (0,1)");
    if (!(cfg.nonlinear_gain > 0.0) || !std::isfinite(cfg.nonlinear_gain) || !(cfg.nonlinear_scale > 0.0) ||
        !std::isfinite(cfg.nonlinear_scale))
        throw std::invalid_argument("generate: nonlinear_gain and nonlinear_scale must be positive");

    std::normal_distribution<double> std_normal(0.0, 1.0);
    SyntheticDataset d;
    const std::size_t n = cfg.n;

    Rng cov_rng = make_rng(cfg.seed, "data.covariates");
    d.x = Matrix(n, cfg.k);
    for (double& v : d.x.data) v = std_normal(cov_rng);

    Rng coef_rng = make_rng(cfg.seed, "data.coefficients");
    std::vector<double> beta(cfg.k);
    for (double& v : beta) v = std_normal(coef_rng);
    std::vector<double> w(cfg.q);
    for (double& v : w) v = std_normal(coef_rng);

    std::vector<double> lin(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cfg.k; ++j) s += d.x(i, j) * beta[j];
        lin[i] = s;
    }

    d.prior_logit.assign(n, 0.0);
    switch (cfg.prior) {
        case PriorKind::constant: break;
        case PriorKind::linear: d.prior_logit = lin; break;
        case PriorKind::nonlinear: {
            const double scale = cfg.k > 0 ? cfg.nonlinear_scale / std::sqrt(static_cast<double>(cfg.k)) : 0.0;
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = lin[i] * scale;
            auto s = detail::nonlinear_shape(v);
            for (double& e : s) e *= cfg.nonlinear_gain;
            const double c = detail::offset_for_fraction(s, cfg.nonlinear_fraction);
            for (std::size_t i = 0; i < n; ++i) d.prior_logit[i] = s[i] + c;
            break;
        }
    }
    d.prior_prob.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.prior_prob[i] = sigmoid(d.prior_logit[i]);

    // standardized logit drives the auxiliary features
    double mean = 0.0, var = 0.0;
    for (double v : d.prior_logit) mean += v;
    mean /= static_cast<double>(n);
    for (double v : d.prior_logit) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    Rng aux_rng = make_rng(cfg.seed, "data.auxiliary");
    d.x_aux = Matrix(n, cfg.q);
    for (std::size_t i = 0; i < n; ++i) {
        const double l = sd > 1e-12 ? (d.prior_logit[i] - mean) / sd : 0.0;
        for (std::size_t j = 0; j < cfg.q; ++j) {
            const double noise_scale = sd > 1e-12 ? std::abs(w[j]) : 1.0;
            d.x_aux(i, j) = w[j] * l + noise_scale * std_normal(aux_rng);
        }
    }

    Rng label_rng = make_rng(cfg.seed, "data.labels");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    d.h.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.h[i] = unif(label_rng) < d.prior_prob[i];

    Rng stat_rng = make_rng(cfg.seed, "data.statistics");
    d.z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std_normal(stat_rng);
        const double u = unif(stat_rng);
        if (!d.h[i]) {
            d.z[i] = e;
        } else if (cfg.alt == AltKind::well_separated) {
            d.z[i] = (u < 0.5 ? -2.5 : 2.5) + e;
        } else {
            d.z[i] = cfg.ps_sd * e;
        }
    }
    return d;
}

struct FdpPower {
    double fdp = 0.0;
    double power = 0.0;
};

/// Realized false discovery proportion and power of a rejection set against the truth.
inline FdpPower true_fdp_power(std::span<const std::size_t> rejected, const std::vector<bool>& truth) {
    std::size_t false_rej = 0, true_rej = 0;
    for (std::size_t i : rejected) {
        if (i >= truth.size()) throw std::out_of_range("true_fdp_power: rejection index out of range");
        truth[i] ? ++true_rej : ++false_rej;
    }
    const auto alternatives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
    FdpPower r;
    if (!rejected.empty()) r.fdp = static_cast<double>(false_rej) / static_cast<double>(rejected.size());
    if (alternatives > 0) r.power = static_cast<double>(true_rej) / static_cast<double>(alternatives);
    return r;
}

}  // namespace hierfdr
