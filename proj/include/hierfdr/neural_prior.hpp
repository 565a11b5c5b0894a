// Covariate-dependent Beta prior on the mixing proportion, learned by mini-batch SGD on the
// L2-regularized negative log marginal likelihood
//
//   p(z_i) = int (lambda f1(z_i) + (1 - lambda) f0(z_i)) Beta(lambda | a_i, b_i) dlambda,
//   (a_i, b_i) = G(x_i).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfdr/beta_quadrature.hpp"
#include "hierfdr/matrix.hpp"
#include "hierfdr/mlp.hpp"
#include "hierfdr/numerics.hpp"
#include "hierfdr/predictive_recursion.hpp"
#include "hierfdr/random.hpp"

namespace hierfdr {

/// Per-test null/alternative density values, stored relative to a per-test scale
/// exp(log_scale) so that extreme statistics do not underflow.
struct DensityTable {
    std::vector<double> f0;
    std::vector<double> f1;
    std::vector<double> log_scale;

    std::size_t size() const { return f0.size(); }

    static DensityTable from_values(std::span<const double> f0, std::span<const double> f1) {
        if (f0.size() != f1.size()) throw std::invalid_argument("DensityTable: length mismatch");
        DensityTable t;
        t.f0.assign(f0.begin(), f0.end());
        t.f1.assign(f1.begin(), f1.end());
        t.log_scale.assign(f0.size(), 0.0);
        return t;
    }
};

inline DensityTable evaluate_densities(std::span<const double> z, const AlternativeDensity& alt) {
    DensityTable t;
    t.f0.resize(z.size());
    t.f1.resize(z.size());
    t.log_scale.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double l0 = normal_logpdf(z[i], alt.null);
        const double l1 = f1_log_eval(alt, z[i]);
        const double s = std::max(l0, l1);
        t.f0[i] = std::exp(l0 - s);
        t.f1[i] = std::exp(l1 - s);
        t.log_scale[i] = s;
    }
    return t;
}

struct MarginalTerms {
    double loglik;
    double d_a;  // d loglik / d a
    double d_b;  // d loglik / d b
};

/// log p(z) and its derivatives in (a, b). The derivative of the Beta log-density is
/// log(lambda) - psi(a) + psi(a+b) (resp. log(1-lambda) - psi(b) + psi(a+b)).
inline MarginalTerms marginal_loglik_terms(double a, double b, double f0, double f1, const BetaQuadrature& quad) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw std::domain_error("marginal_loglik: shape parameters must be positive and finite");
    if (!(f0 >= 0.0) || !(f1 >= 0.0)) throw std::domain_error("marginal_loglik: negative density value");
    const double lb = log_beta_fn(a, b);
    double s = 0.0;
    double s_log = 0.0;
    double s_log1m = 0.0;
    for (const auto& nd : quad.nodes()) {
        const double mass = nd.weight * std::exp((a - 1.0) * nd.log_x + (b - 1.0) * nd.log_1mx - lb);
        const double h = mass * (nd.x * f1 + (1.0 - nd.x) * f0);
        s += h;
        s_log += h * nd.log_x;
        s_log1m += h * nd.log_1mx;
    }
    const double tail_l = std::exp(a * quad.log_eps_left() - std::log(a) - lb) * f0;
    const double tail_r = std::exp(b * quad.log_eps_right() - std::log(b) - lb) * f1;
    const double total = s + tail_l + tail_r;
    if (!(total > 0.0) || !std::isfinite(total))
        throw std::domain_error("marginal_loglik: degenerate marginal density");

    const double psi_ab = digamma(a + b);
    const double ga = digamma(a) - psi_ab;
    const double gb = digamma(b) - psi_ab;
    const double dp_da = s_log - s * ga + tail_l * (quad.log_eps_left() - 1.0 / a - ga) - tail_r * ga;
    const double dp_db = s_log1m - s * gb - tail_l * gb + tail_r * (quad.log_eps_right() - 1.0 / b - gb);
    return {std::log(total), dp_da / total, dp_db / total};
}

inline double marginal_loglik(double a, double b, double f0, double f1, const BetaQuadrature& quad) {
    return marginal_loglik_terms(a, b, f0, f1, quad).loglik;
}

inline double marginal_loglik(double a, double b, double f0, double f1, const UnitIntervalGrid& grid) {
    return marginal_loglik(a, b, f0, f1, BetaQuadrature(grid));
}

struct LossGrad {
    double loss = 0.0;       // data term + penalty
    double data_loss = 0.0;  // mean negative log marginal likelihood
    std::vector<double> grad;
};

/// Mean negative log marginal likelihood over `batch` plus l2_strength * (sum of squared weights),
/// with its gradient in the model's flat parameter layout.
inline LossGrad loss_and_grad(const MlpModel& model, const Matrix& x, std::span<const std::size_t> batch,
                              const DensityTable& dens, const BetaQuadrature& quad, double l2_strength,
                              bool with_grad = true) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    if (x.cols != model.input_dim()) throw std::invalid_argument("loss_and_grad: covariate dimension mismatch");
    LossGrad out;
    if (with_grad) out.grad.assign(model.parameters().size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    MlpModel::Trace tr;
    double nll = 0.0;
    for (std::size_t i : batch) {
        const BetaPair ab = model.forward(x.row(i), &tr);
        const MarginalTerms t = marginal_loglik_terms(ab.a, ab.b, dens.f0[i], dens.f1[i], quad);
        const double li = t.loglik + dens.log_scale[i];
        if (!std::isfinite(li) || !std::isfinite(t.d_a) || !std::isfinite(t.d_b))
            throw std::runtime_error("loss_and_grad: non-finite loss at test index " + std::to_string(i));
        nll -= li;
        if (with_grad) {
            const auto& raw = tr.act.back();
            const double d_oa = -t.d_a * model.output_map_derivative(raw[0]) * inv_n;
            const double d_ob = -t.d_b * model.output_map_derivative(raw[1]) * inv_n;
            model.backward(tr, d_oa, d_ob, out.grad);
        }
    }
    out.data_loss = nll * inv_n;
    out.loss = out.data_loss;
    if (l2_strength > 0.0) {
        out.loss += l2_strength * model.sum_squared_weights();
        if (with_grad) {
            const auto params = model.parameters();
            for (std::size_t l = 0; l < model.n_layers(); ++l)
                for (std::size_t k = model.weight_offset(l); k < model.bias_offset(l); ++k)
                    out.grad[k] += 2.0 * l2_strength * params[k];
        }
    }
    return out;
}

struct TrainConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double l2_strength = 0.01;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 200;
    double holdout_fraction = 0.2;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    std::size_t lambda_grid_nodes = 100;
    std::vector<std::size_t> hidden = {64, 32};
    double clip_norm = 10.0;
    double output_bias = 2.0;  // initial raw bias of both outputs
    std::size_t folds = 5;      // cross-fitting folds; 1 fits a single network on every test

    void validate() const {
        if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("TrainConfig: momentum must lie in [0,1)");
        if (!(l2_strength >= 0.0)) throw std::invalid_argument("TrainConfig: l2_strength must be nonnegative");
        if (batch_size == 0 || max_epochs == 0 || patience == 0)
            throw std::invalid_argument("TrainConfig: batch_size, max_epochs and patience must be positive");
        if (!(holdout_fraction >= 0.0 && holdout_fraction < 0.5))
            throw std::invalid_argument("TrainConfig: holdout_fraction must lie in [0, 0.5)");
        if (lambda_grid_nodes < 2) throw std::invalid_argument("TrainConfig: lambda_grid_nodes must be at least 2");
        if (!(clip_norm > 0.0)) throw std::invalid_argument("TrainConfig: clip_norm must be positive");
        if (!std::isfinite(output_bias)) throw std::invalid_argument("TrainConfig: output_bias must be finite");
        if (folds == 0) throw std::invalid_argument("TrainConfig: folds must be positive");
    }
};

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},
            {"l2_strength", c.l2_strength},     {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},       {"holdout_fraction", c.holdout_fraction},
            {"patience", c.patience},           {"seed", c.seed},
            {"lambda_grid_nodes", c.lambda_grid_nodes}, {"hidden", c.hidden},
            {"clip_norm", c.clip_norm},         {"output_bias", c.output_bias},
            {"folds", c.folds}};
}

/// Per-test Beta prior parameters, before (raw) and after auxiliary adjustment.
struct BetaPriorField {
    std::vector<double> a_raw;
    std::vector<double> b_raw;
    std::vector<double> a;
    std::vector<double> b;
    bool adjusted = false;

    std::size_t size() const { return a.size(); }

    static BetaPriorField from_raw(std::vector<double> a_raw, std::vector<double> b_raw) {
        if (a_raw.size() != b_raw.size()) throw std::invalid_argument("BetaPriorField: length mismatch");
        for (std::size_t i = 0; i < a_raw.size(); ++i)
            if (!(a_raw[i] > 0.0) || !(b_raw[i] > 0.0) || !std::isfinite(a_raw[i]) || !std::isfinite(b_raw[i]))
                throw std::invalid_argument("BetaPriorField: parameters must be positive and finite");
        BetaPriorField f;
        f.a = a_raw;
        f.b = b_raw;
        f.a_raw = std::move(a_raw);
        f.b_raw = std::move(b_raw);
        return f;
    }
};

inline BetaPriorField predict_field(const MlpModel& model, const Matrix& x) {
    std::vector<double> a(x.rows), b(x.rows);
    const auto pairs = model.forward_batch(x);
    for (std::size_t i = 0; i < x.rows; ++i) {
        a[i] = pairs[i].a;
        b[i] = pairs[i].b;
    }
    return BetaPriorField::from_raw(std::move(a), std::move(b));
}

struct FitTrace {
    std::vector<double> train_loss;    // objective on the training split, index 0 = before any update
    std::vector<double> holdout_loss;  // mean NLL on the holdout split (empty when there is none)
    std::size_t best_epoch = 0;
};

struct TrainResult {
    std::vector<MlpModel> models;   // one network per fold
    std::vector<std::size_t> fold;  // fold of each test; its prior comes from models[fold[i]]
    std::vector<FitTrace> traces;
    BetaPriorField field;

    const MlpModel& model() const { return models.front(); }
    const FitTrace& trace() const { return traces.front(); }
};

/// Column means and standard deviations over `rows` (scale 1 for constant columns).
inline void column_stats(const Matrix& x, std::span<const std::size_t> rows, std::vector<double>& mean,
                         std::vector<double>& scale) {
    mean.assign(x.cols, 0.0);
    scale.assign(x.cols, 1.0);
    if (rows.empty()) return;
    const double n = static_cast<double>(rows.size());
    for (std::size_t i : rows)
        for (std::size_t j = 0; j < x.cols; ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= n;
    std::vector<double> ss(x.cols, 0.0);
    for (std::size_t i : rows)
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = x(i, j) - mean[j];
            ss[j] += d * d;
        }
    for (std::size_t j = 0; j < x.cols; ++j) {
        const double sd = std::sqrt(ss[j] / n);
        scale[j] = sd > 1e-12 ? sd : 1.0;
    }
}

/// One network fitted on `rows` of x, with its own holdout split and early stopping.
inline std::pair<MlpModel, FitTrace> fit_network(const Matrix& x, const DensityTable& dens,
                                                 std::vector<std::size_t> rows, const TrainConfig& config,
                                                 std::uint64_t seed) {
    const std::size_t n = rows.size();
    Rng split_rng = make_rng(seed, "holdout");
    std::shuffle(rows.begin(), rows.end(), split_rng);
    const auto n_hold = static_cast<std::size_t>(std::floor(config.holdout_fraction * static_cast<double>(n)));
    std::vector<std::size_t> holdout(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::vector<std::size_t> train_idx(rows.begin() + static_cast<std::ptrdiff_t>(n_hold), rows.end());
    std::sort(holdout.begin(), holdout.end());
    std::sort(train_idx.begin(), train_idx.end());

    std::vector<std::size_t> sizes{x.cols};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(2);
    MlpModel model(sizes);
    Rng init_rng = make_rng(seed, "init");
    model.initialize(init_rng);
    {
        auto params = model.parameters();
        const std::size_t out_bias = model.bias_offset(model.n_layers() - 1);
        params[out_bias] = params[out_bias + 1] = config.output_bias;
    }
    std::vector<double> mean, scale;
    column_stats(x, train_idx, mean, scale);
    model.set_standardization(std::move(mean), std::move(scale));

    const BetaQuadrature quad(make_lambda_grid(config.lambda_grid_nodes));
    auto evaluate = [&](const MlpModel& m) {
        const double tr = loss_and_grad(m, x, train_idx, dens, quad, config.l2_strength, false).loss;
        const double ho =
            holdout.empty() ? tr : loss_and_grad(m, x, holdout, dens, quad, 0.0, false).data_loss;
        return std::pair{tr, ho};
    };

    FitTrace trace;
    auto [tr0, ho0] = evaluate(model);
    trace.train_loss.push_back(tr0);
    if (!holdout.empty()) trace.holdout_loss.push_back(ho0);
    double best = ho0;
    std::vector<double> best_params(model.parameters().begin(), model.parameters().end());
    std::size_t since_best = 0;

    std::vector<double> velocity(model.parameters().size(), 0.0);
    Rng batch_rng = make_rng(seed, "batching");
    std::vector<std::size_t> order = train_idx;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), batch_rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, stop - start);
            LossGrad lg = loss_and_grad(model, x, batch, dens, quad, config.l2_strength);
            double norm2 = 0.0;
            for (double g : lg.grad) norm2 += g * g;
            const double norm = std::sqrt(norm2);
            if (!std::isfinite(norm))
                throw std::runtime_error("train: non-finite gradient in epoch " + std::to_string(epoch));
            const double clip = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
            auto params = model.parameters();
            for (std::size_t k = 0; k < params.size(); ++k) {
                velocity[k] = config.momentum * velocity[k] - config.learning_rate * clip * lg.grad[k];
                params[k] += velocity[k];
            }
        }
        auto [tr, ho] = evaluate(model);
        if (!std::isfinite(tr) || !std::isfinite(ho))
            throw std::runtime_error("train: non-finite loss after epoch " + std::to_string(epoch));
        trace.train_loss.push_back(tr);
        if (!holdout.empty()) trace.holdout_loss.push_back(ho);
        if (ho < best) {
            best = ho;
            trace.best_epoch = epoch;
            std::copy(model.parameters().begin(), model.parameters().end(), best_params.begin());
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    std::copy(best_params.begin(), best_params.end(), model.parameters().begin());
    return {std::move(model), std::move(trace)};
}

/// Trains the prior network on covariates `x` (one row per test). Early stopping keeps the
/// parameters with the lowest holdout NLL. With folds > 1 the tests are split into folds and
/// each fold's priors come from a network fitted on the other folds only.
inline TrainResult train(const Matrix& x, const DensityTable& dens, const TrainConfig& config) {
    config.validate();
    const std::size_t n = x.rows;
    if (n < 10) throw std::invalid_argument("train: need at least 10 tests");
    if (dens.size() != n) throw std::invalid_argument("train: density table does not match covariates");
    if (x.cols == 0) throw std::invalid_argument("train: no covariates");
    if (config.folds > n / 5) throw std::invalid_argument("train: too many folds for " + std::to_string(n) + " tests");

    TrainResult res;
    res.fold.assign(n, 0);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (config.folds <= 1) {
        auto [model, trace] = fit_network(x, dens, all, config, config.seed);
        res.models.push_back(std::move(model));
        res.traces.push_back(std::move(trace));
        res.field = predict_field(res.models.front(), x);
        return res;
    }

    Rng fold_rng = make_rng(config.seed, "folds");
    std::shuffle(all.begin(), all.end(), fold_rng);
    for (std::size_t pos = 0; pos < n; ++pos) res.fold[all[pos]] = pos % config.folds;
    std::vector<double> a(n), b(n);
    for (std::size_t k = 0; k < config.folds; ++k) {
        std::vector<std::size_t> fit_rows, pred_rows;
        for (std::size_t i = 0; i < n; ++i) (res.fold[i] == k ? pred_rows : fit_rows).push_back(i);
        auto [model, trace] = fit_network(x, dens, fit_rows, config, derive_seed(config.seed, "fold" + std::to_string(k)));
        const auto pairs = model.forward_batch(select_rows(x, pred_rows));
        for (std::size_t r = 0; r < pred_rows.size(); ++r) {
            a[pred_rows[r]] = pairs[r].a;
            b[pred_rows[r]] = pairs[r].b;
        }
        res.models.push_back(std::move(model));
        res.traces.push_back(std::move(trace));
    }
    res.field = BetaPriorField::from_raw(std::move(a), std::move(b));
    return res;
}

}  // namespace hierfdr
