// Multilayer perceptron mapping a covariate vector to a pair of Beta shape parameters.
//
// Hidden layers use ReLU. The two outputs pass through softplus, get a positive floor
// added and are capped at a ceiling. Inputs are standardized with stored column
// statistics before the first layer. Parameters live in one flat vector, layer by
// layer, weights (row-major, out x in) before biases.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfdr/matrix.hpp"
#include "hierfdr/random.hpp"

namespace hierfdr {

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct BetaPair {
    double a;
    double b;
};

class MlpModel {
public:
    static constexpr double kDefaultFloor = 1e-3;
    static constexpr double kDefaultCeiling = 1e3;

    MlpModel() = default;

    /// layer_sizes = {input, hidden..., 2}. All parameters start at zero.
    explicit MlpModel(std::vector<std::size_t> layer_sizes, double floor = kDefaultFloor,
                      double ceiling = kDefaultCeiling)
        : sizes_(std::move(layer_sizes)), floor_(floor), ceiling_(ceiling) {
        if (sizes_.size() < 2) throw std::invalid_argument("MlpModel: need at least input and output sizes");
        if (sizes_.back() != 2) throw std::invalid_argument("MlpModel: output dimension must be 2");
        for (std::size_t s : sizes_)
            if (s == 0) throw std::invalid_argument("MlpModel: empty layer");
        if (!(floor_ > 0.0) || !(ceiling_ > floor_)) throw std::invalid_argument("MlpModel: need 0 < floor < ceiling");
        std::size_t offset = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            weight_offset_.push_back(offset);
            offset += sizes_[l] * sizes_[l + 1];
            bias_offset_.push_back(offset);
            offset += sizes_[l + 1];
        }
        params_.assign(offset, 0.0);
        input_mean_.assign(sizes_.front(), 0.0);
        input_scale_.assign(sizes_.front(), 1.0);
    }

    /// He-normal hidden weights, zero biases, zero output layer.
    void initialize(Rng& rng) {
        std::fill(params_.begin(), params_.end(), 0.0);
        for (std::size_t l = 0; l + 2 < sizes_.size(); ++l) {
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(1, sizes_[l]))));
            double* w = params_.data() + weight_offset_[l];
            for (std::size_t k = 0; k < sizes_[l] * sizes_[l + 1]; ++k) w[k] = dist(rng);
        }
    }

    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    std::size_t n_layers() const { return sizes_.size() - 1; }
    std::size_t input_dim() const { return sizes_.front(); }
    double floor() const { return floor_; }
    double ceiling() const { return ceiling_; }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    std::size_t weight_offset(std::size_t layer) const { return weight_offset_.at(layer); }
    std::size_t bias_offset(std::size_t layer) const { return bias_offset_.at(layer); }
    bool is_weight(std::size_t param_index) const {
        for (std::size_t l = 0; l < n_layers(); ++l)
            if (param_index >= weight_offset_[l] && param_index < bias_offset_[l]) return true;
        return false;
    }

    double sum_squared_weights() const {
        double s = 0.0;
        for (std::size_t l = 0; l < n_layers(); ++l)
            for (std::size_t k = weight_offset_[l]; k < bias_offset_[l]; ++k) s += params_[k] * params_[k];
        return s;
    }

    std::span<const double> input_mean() const { return input_mean_; }
    std::span<const double> input_scale() const { return input_scale_; }

    void set_standardization(std::vector<double> mean, std::vector<double> scale) {
        if (mean.size() != input_dim() || scale.size() != input_dim())
            throw std::invalid_argument("MlpModel: standardization size mismatch");
        for (double s : scale)
            if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("MlpModel: nonpositive input scale");
        input_mean_ = std::move(mean);
        input_scale_ = std::move(scale);
    }

    /// Per-example activations retained for back-propagation.
    struct Trace {
        std::vector<std::vector<double>> act;  // act[0] standardized input, act[l] post-ReLU, last = raw outputs
    };

    BetaPair forward(std::span<const double> x, Trace* trace = nullptr) const {
        if (x.size() != input_dim()) throw std::invalid_argument("MlpModel::forward: input dimension mismatch");
        Trace local;
        Trace& tr = trace ? *trace : local;
        tr.act.resize(sizes_.size());
        auto& in = tr.act[0];
        in.resize(input_dim());
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (!std::isfinite(x[j])) throw std::invalid_argument("MlpModel::forward: non-finite input");
            in[j] = (x[j] - input_mean_[j]) / input_scale_[j];
        }
        for (std::size_t l = 0; l < n_layers(); ++l) {
            const std::size_t n_in = sizes_[l];
            const std::size_t n_out = sizes_[l + 1];
            const double* w = params_.data() + weight_offset_[l];
            const double* bias = params_.data() + bias_offset_[l];
            const auto& prev = tr.act[l];
            auto& cur = tr.act[l + 1];
            cur.resize(n_out);
            const bool hidden = l + 1 < n_layers();
            for (std::size_t o = 0; o < n_out; ++o) {
                double s = bias[o];
                const double* row = w + o * n_in;
                for (std::size_t i = 0; i < n_in; ++i) s += row[i] * prev[i];
                cur[o] = hidden ? std::max(0.0, s) : s;
            }
        }
        const auto& out = tr.act.back();
        return {output_map(out[0]), output_map(out[1])};
    }

    /// Row-wise forward over a matrix of raw covariates.
    std::vector<BetaPair> forward_batch(const Matrix& x) const {
        std::vector<BetaPair> out;
        out.reserve(x.rows);
        Trace tr;
        for (std::size_t i = 0; i < x.rows; ++i) out.push_back(forward(x.row(i), &tr));
        return out;
    }

    /// softplus(o) + floor, capped at the ceiling.
    double output_map(double o) const { return std::min(softplus(o) + floor_, ceiling_); }
    /// d output_map / d o (zero where the cap is active).
    double output_map_derivative(double o) const { return softplus(o) + floor_ >= ceiling_ ? 0.0 : sigmoid(o); }

    /// Accumulates parameter gradients given d loss / d (raw outputs) for one traced example.
    void backward(const Trace& tr, double d_out_a, double d_out_b, std::span<double> grad) const {
        std::vector<double> delta{d_out_a, d_out_b};
        std::vector<double> prev_delta;
        for (std::size_t l = n_layers(); l-- > 0;) {
            const std::size_t n_in = sizes_[l];
            const std::size_t n_out = sizes_[l + 1];
            const double* w = params_.data() + weight_offset_[l];
            double* gw = grad.data() + weight_offset_[l];
            double* gb = grad.data() + bias_offset_[l];
            const auto& prev = tr.act[l];
            for (std::size_t o = 0; o < n_out; ++o) {
                const double d = delta[o];
                gb[o] += d;
                if (d == 0.0) continue;
                double* grow = gw + o * n_in;
                for (std::size_t i = 0; i < n_in; ++i) grow[i] += d * prev[i];
            }
            if (l == 0) break;
            prev_delta.assign(n_in, 0.0);
            for (std::size_t o = 0; o < n_out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                const double* row = w + o * n_in;
                for (std::size_t i = 0; i < n_in; ++i) prev_delta[i] += d * row[i];
            }
            // ReLU gate of layer l (its post-activation is zero where inactive)
            for (std::size_t i = 0; i < n_in; ++i)
                if (!(prev[i] > 0.0)) prev_delta[i] = 0.0;
            delta.swap(prev_delta);
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json layers = nlohmann::json::array();
        for (std::size_t l = 0; l < n_layers(); ++l) {
            const auto w_begin = params_.begin() + static_cast<std::ptrdiff_t>(weight_offset_[l]);
            const auto b_begin = params_.begin() + static_cast<std::ptrdiff_t>(bias_offset_[l]);
            const auto b_end = b_begin + static_cast<std::ptrdiff_t>(sizes_[l + 1]);
            layers.push_back({{"rows", sizes_[l + 1]},
                              {"cols", sizes_[l]},
                              {"weights", std::vector<double>(w_begin, b_begin)},
                              {"bias", std::vector<double>(b_begin, b_end)}});
        }
        return {{"layer_sizes", sizes_}, {"floor", floor_},         {"ceiling", ceiling_},
                {"layers", layers},      {"input_mean", input_mean_}, {"input_scale", input_scale_}};
    }

    static MlpModel from_json(const nlohmann::json& j) {
        MlpModel m(j.at("layer_sizes").get<std::vector<std::size_t>>(), j.at("floor").get<double>(),
                   j.at("ceiling").get<double>());
        const auto& layers = j.at("layers");
        if (layers.size() != m.n_layers()) throw std::invalid_argument("model JSON: layer count mismatch");
        for (std::size_t l = 0; l < m.n_layers(); ++l) {
            const auto w = layers[l].at("weights").get<std::vector<double>>();
            const auto b = layers[l].at("bias").get<std::vector<double>>();
            if (w.size() != m.sizes_[l] * m.sizes_[l + 1] || b.size() != m.sizes_[l + 1])
                throw std::invalid_argument("model JSON: layer " + std::to_string(l) + " has the wrong shape");
            std::copy(w.begin(), w.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.weight_offset_[l]));
            std::copy(b.begin(), b.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(m.bias_offset_[l]));
        }
        m.set_standardization(j.at("input_mean").get<std::vector<double>>(),
                              j.at("input_scale").get<std::vector<double>>());
        return m;
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> weight_offset_;
    std::vector<std::size_t> bias_offset_;
    std::vector<double> params_;
    std::vector<double> input_mean_;
    std::vector<double> input_scale_;
    double floor_ = kDefaultFloor;
    double ceiling_ = kDefaultCeiling;
};

}  // namespace hierfdr
