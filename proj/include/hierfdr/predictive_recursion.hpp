// Predictive-recursion estimate of the mixing measure  Psi = pi0 * delta_0 + pi(tau) dtau
// for z ~ N(mu + tau, sigma^2), giving the null mass pi0 and the alternative density
// f1(z) = int N(z | mu + tau, sigma^2) pi(tau) dtau / int pi(tau) dtau.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfdr/numerics.hpp"
#include "hierfdr/random.hpp"

namespace hierfdr {

struct PrConfig {
    int n_sweeps = 10;
    double gamma_exponent = 2.0 / 3.0;
    double initial_pi0 = 0.9;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_sweeps < 0) throw std::invalid_argument("PrConfig: n_sweeps must be nonnegative");
        if (!(gamma_exponent > 0.5 && gamma_exponent <= 1.0))
            throw std::invalid_argument("PrConfig: gamma_exponent must lie in (0.5, 1]");
        if (!(initial_pi0 > 0.0 && initial_pi0 < 1.0))
            throw std::invalid_argument("PrConfig: initial_pi0 must lie in (0,1)");
    }
};

struct AlternativeDensity {
    RealLineGrid tau_grid;
    std::vector<double> pi_tau;  // continuous signal component, density values on tau_grid
    double pi0 = 1.0;            // atom at tau = 0
    NullParams null;

    double signal_mass() const { return tau_grid.trapezoid(pi_tau); }
    double total_mass() const { return pi0 + signal_mass(); }
};

/// Called after every recursion step with (step index, current density).
using PrObserver = std::function<void(std::size_t, const AlternativeDensity&)>;

inline AlternativeDensity fit_predictive_recursion(std::span<const double> z, const NullParams& null,
                                                   const RealLineGrid& tau_grid, const PrConfig& config,
                                                   const PrObserver& observer = {}) {
    null.validate();
    tau_grid.validate();
    config.validate();
    if (z.empty()) throw std::invalid_argument("fit_predictive_recursion: no test statistics");
    for (double v : z)
        if (!std::isfinite(v)) throw std::invalid_argument("fit_predictive_recursion: non-finite test statistic");

    AlternativeDensity psi;
    psi.tau_grid = tau_grid;
    psi.null = null;
    psi.pi0 = config.initial_pi0;
    const double width = tau_grid.nodes.back() - tau_grid.nodes.front();
    psi.pi_tau.assign(tau_grid.size(), (1.0 - config.initial_pi0) / width);

    const std::vector<double> trap = tau_grid.trapezoid_weights();
    const std::size_t n_tau = tau_grid.size();
    std::vector<double> kernel(n_tau);
    std::vector<std::size_t> order(z.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(config.seed, "permutation");

    std::size_t step = 0;
    for (int sweep = 0; sweep < config.n_sweeps; ++sweep) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            ++step;
            const double zi = z[idx];
            const double gamma = std::pow(static_cast<double>(step) + 1.0, -config.gamma_exponent);
            // kernels are shared by the atom and the grid, so a common scale cancels in the update
            const double k0 = normal_pdf(zi, null);
            double marginal = psi.pi0 * k0;
            for (std::size_t j = 0; j < n_tau; ++j) {
                const double u = (zi - null.mu - tau_grid.nodes[j]) / null.sigma;
                kernel[j] = std::exp(-0.5 * u * u) / (null.sigma * std::sqrt(2.0 * std::numbers::pi));
                marginal += trap[j] * kernel[j] * psi.pi_tau[j];
            }
            if (!(marginal > 0.0) || !std::isfinite(marginal)) {
                // statistic far outside the grid support; carries no usable information
                continue;
            }
            const double keep = 1.0 - gamma;
            const double scale = gamma / marginal;
            psi.pi0 = psi.pi0 * (keep + scale * k0);
            for (std::size_t j = 0; j < n_tau; ++j) psi.pi_tau[j] *= keep + scale * kernel[j];
            if (observer) observer(step, psi);
        }
    }
    return psi;
}

inline AlternativeDensity fit_predictive_recursion(std::span<const double> z, const NullParams& null = {},
                                                   const PrConfig& config = {}) {
    return fit_predictive_recursion(z, null, make_tau_grid(null), config);
}

/// log f1(z); -inf when z is out of reach of every grid component.
inline double f1_log_eval(const AlternativeDensity& density, double z) {
    if (!std::isfinite(z)) throw std::invalid_argument("f1_eval: non-finite argument");
    const double mass = density.signal_mass();
    if (!(mass > 0.0)) throw std::runtime_error("f1_eval: no signal component estimated");
    const auto& nodes = density.tau_grid.nodes;
    const std::vector<double> trap = density.tau_grid.trapezoid_weights();
    const double sigma = density.null.sigma;
    // log-sum-exp over grid components
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(nodes.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double w = trap[j] * density.pi_tau[j];
        if (!(w > 0.0)) continue;
        const double u = (z - density.null.mu - nodes[j]) / sigma;
        terms[j] = std::log(w) - 0.5 * u * u;
        peak = std::max(peak, terms[j]);
    }
    if (!std::isfinite(peak)) return peak;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - peak);
    return peak + std::log(s) - std::log(mass) - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double f1_eval(const AlternativeDensity& density, double z) { return std::exp(f1_log_eval(density, z)); }

inline nlohmann::json to_json(const AlternativeDensity& d) {
    return {{"tau_nodes", d.tau_grid.nodes}, {"pi_tau", d.pi_tau}, {"pi0", d.pi0},
            {"mu", d.null.mu},               {"sigma", d.null.sigma}};
}

inline AlternativeDensity density_from_json(const nlohmann::json& j) {
    AlternativeDensity d;
    d.tau_grid.nodes = j.at("tau_nodes").get<std::vector<double>>();
    d.pi_tau = j.at("pi_tau").get<std::vector<double>>();
    d.pi0 = j.at("pi0").get<double>();
    d.null.mu = j.at("mu").get<double>();
    d.null.sigma = j.at("sigma").get<double>();
    d.null.validate();
    d.tau_grid.validate();
    if (d.pi_tau.size() != d.tau_grid.size()) throw std::invalid_argument("density JSON: pi_tau/tau_nodes length mismatch");
    if (!(d.pi0 >= 0.0 && d.pi0 <= 1.0)) throw std::invalid_argument("density JSON: pi0 outside [0,1]");
    for (double v : d.pi_tau)
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("density JSON: negative or non-finite pi_tau");
    return d;
}

}  // namespace hierfdr
