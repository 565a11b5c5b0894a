// End-to-end fitting for every method in the roster. One Pipeline per data set; stages shared
// between methods (statistics, predictive recursion, network on X) are computed once.
//
//   bh, sbh     p-values -> step-up rule at each alpha
//   twogroups   predictive recursion -> posterior with lambda = 1 - pi0
//   nn-only     predictive recursion -> network on X -> Beta-prior posteriors
//   neurt-a     nn-only network -> regression of (log a, log b) on X_aux -> posteriors
//   neurt-b     network on [X, X_aux] -> posteriors

#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfdr/aux_regression.hpp"
#include "hierfdr/baselines.hpp"
#include "hierfdr/beta_quadrature.hpp"
#include "hierfdr/dataset.hpp"
#include "hierfdr/neural_prior.hpp"
#include "hierfdr/numerics.hpp"
#include "hierfdr/predictive_recursion.hpp"
#include "hierfdr/random.hpp"
#include "hierfdr/two_groups.hpp"

namespace hierfdr {

enum class Method { bh, sbh, twogroups, nn_only, neurt_a, neurt_b };

inline constexpr Method kAllMethods[] = {Method::bh,      Method::sbh,     Method::twogroups,
                                         Method::nn_only, Method::neurt_a, Method::neurt_b};

inline std::string to_string(Method m) {
    switch (m) {
        case Method::bh: return "bh";
        case Method::sbh: return "sbh";
        case Method::twogroups: return "twogroups";
        case Method::nn_only: return "nn-only";
        case Method::neurt_a: return "neurt-a";
        case Method::neurt_b: return "neurt-b";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (Method m : kAllMethods)
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown method '" + std::string(s) +
                                "' (expected bh, sbh, twogroups, nn-only, neurt-a or neurt-b)");
}

inline bool uses_posterior(Method m) { return m != Method::bh && m != Method::sbh; }

struct PipelineConfig {
    NullParams null;
    PrConfig pr;
    TrainConfig train;
    bool two_sided = true;
    double storey_tuning = 0.5;
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const PipelineConfig& c) {
    return {{"null", {{"mu", c.null.mu}, {"sigma", c.null.sigma}}},
            {"pr", {{"n_sweeps", c.pr.n_sweeps}, {"gamma_exponent", c.pr.gamma_exponent}, {"initial_pi0", c.pr.initial_pi0}}},
            {"train", to_json(c.train)},
            {"two_sided", c.two_sided},
            {"storey_tuning", c.storey_tuning},
            {"seed", c.seed}};
}

struct MethodFit {
    Method method = Method::bh;
    std::vector<double> pvalues;    // bh, sbh
    std::vector<double> posterior;  // posterior-based methods
    double storey_tuning = 0.5;
    std::optional<AlternativeDensity> density;
    std::optional<BetaPriorField> field;
    std::optional<TrainResult> training;
    std::optional<BivariateRegression> regression;
};

/// Rejected indices at level alpha, in ascending index order for the p-value methods and in
/// descending-posterior order otherwise.
inline std::vector<std::size_t> rejections(const MethodFit& fit, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    switch (fit.method) {
        case Method::bh: return bh(fit.pvalues, alpha);
        case Method::sbh: return storey_bh(fit.pvalues, alpha, fit.storey_tuning);
        default: return select_discoveries(fit.posterior, alpha).rejected;
    }
}

class Pipeline {
public:
    Pipeline(DataFile data, PipelineConfig config) : data_(std::move(data)), config_(std::move(config)) {
        if (data_.size() == 0) throw std::invalid_argument("data set has no rows");
        config_.pr.seed = config_.seed;
        config_.train.seed = config_.seed;
    }

    const DataFile& data() const { return data_; }
    const PipelineConfig& config() const { return config_; }

    MethodFit fit(Method m) {
        MethodFit out;
        out.method = m;
        out.storey_tuning = config_.storey_tuning;
        switch (m) {
            case Method::bh:
            case Method::sbh: out.pvalues = pvalues(); return out;
            case Method::twogroups: {
                const auto& dens = density();
                const auto& tab = table();
                const double lambda = dens.signal_mass() / dens.total_mass();
                out.posterior.resize(tab.size());
                for (std::size_t i = 0; i < tab.size(); ++i)
                    out.posterior[i] = posterior_fixed_lambda(lambda, tab.f0[i], tab.f1[i]);
                out.density = dens;
                return out;
            }
            case Method::nn_only: {
                require_x();
                const auto& tr = training_x();
                out.field = tr.field;
                out.training = tr;
                break;
            }
            case Method::neurt_a: {
                require_x();
                require_aux();
                const auto& tr = training_x();
                BivariateRegression reg;
                out.field = fit_and_adjust(tr.field, data_.aux, &reg);
                out.regression = reg;
                out.training = tr;
                break;
            }
            case Method::neurt_b: {
                require_x();
                require_aux();
                const auto& tr = training_stacked();
                out.field = tr.field;
                out.training = tr;
                break;
            }
        }
        out.density = density();
        out.posterior = posteriors(*out.field);
        return out;
    }

    /// z statistics used by the density stages. A p-only file is converted; with two-sided
    /// p-values each converted statistic gets a seeded random sign so the null stays N(0,1).
    const std::vector<double>& statistics() {
        if (!z_) {
            if (data_.z) {
                z_ = *data_.z;
            } else {
                std::vector<double> z(data_.p->size());
                Rng sign_rng = make_rng(config_.seed, "data.sign");
                std::bernoulli_distribution coin(0.5);
                for (std::size_t i = 0; i < z.size(); ++i) {
                    z[i] = p_to_z((*data_.p)[i], config_.two_sided);
                    if (config_.two_sided && coin(sign_rng)) z[i] = -z[i];
                }
                z_ = std::move(z);
            }
        }
        return *z_;
    }

    const std::vector<double>& pvalues() {
        if (!p_) {
            if (data_.p) {
                p_ = *data_.p;
            } else {
                std::vector<double> p(data_.z->size());
                for (std::size_t i = 0; i < p.size(); ++i) p[i] = z_to_p((*data_.z)[i], config_.two_sided);
                p_ = std::move(p);
            }
        }
        return *p_;
    }

    /// Use a previously estimated alternative density instead of running predictive recursion.
    void set_density(AlternativeDensity d) {
        density_ = std::move(d);
        table_.reset();
    }

    const AlternativeDensity& density() {
        if (!density_) density_ = fit_predictive_recursion(statistics(), config_.null, make_tau_grid(config_.null), config_.pr);
        return *density_;
    }

    const DensityTable& table() {
        if (!table_) table_ = evaluate_densities(statistics(), density());
        return *table_;
    }

private:
    template <class T>
    struct Memo {
        std::optional<T> value;
        std::exception_ptr error;

        const T& get(const std::function<T()>& make) {
            if (error) std::rethrow_exception(error);
            if (!value) {
                try {
                    value = make();
                } catch (...) {
                    error = std::current_exception();
                    throw;
                }
            }
            return *value;
        }
    };

    void require_x() const {
        if (data_.x.cols == 0)
            throw std::invalid_argument("test-level covariates (x_<j> columns) required; columns found: " + data_.roles());
    }
    void require_aux() const {
        if (data_.aux.cols == 0)
            throw std::invalid_argument("auxiliary covariates required (a_<j> columns); columns found: " + data_.roles());
    }

    const TrainResult& training_x() {
        return train_x_.get([this] { return train(data_.x, table(), config_.train); });
    }

    const TrainResult& training_stacked() {
        return train_stacked_.get([this] { return train(hconcat(data_.x, data_.aux), table(), config_.train); });
    }

    std::vector<double> posteriors(const BetaPriorField& field) {
        const auto& tab = table();
        if (!quad_) quad_.emplace(make_lambda_grid(config_.train.lambda_grid_nodes));
        std::vector<double> w(tab.size());
        for (std::size_t i = 0; i < tab.size(); ++i) w[i] = posterior_beta(field.a[i], field.b[i], tab.f0[i], tab.f1[i], *quad_);
        return w;
    }

    DataFile data_;
    PipelineConfig config_;
    std::optional<std::vector<double>> z_;
    std::optional<std::vector<double>> p_;
    std::optional<AlternativeDensity> density_;
    std::optional<DensityTable> table_;
    std::optional<BetaQuadrature> quad_;
    Memo<TrainResult> train_x_;
    Memo<TrainResult> train_stacked_;
};

}  // namespace hierfdr
