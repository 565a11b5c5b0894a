// Composite rule for integrals of the form  int_0^1 g(lambda) Beta(lambda | a, b) dlambda.
//
// The cells of a UnitIntervalGrid are integrated with a 4-point Gauss-Legendre rule.
// The two cells touching 0 and 1 are split geometrically toward the endpoint and
// integrated in log(lambda) (resp. log(1-lambda)), which absorbs the integrable
// singularity of the Beta density when a < 1 or b < 1. What is left below the
// smallest sub-cell, [0, eps] and [1-eps, 1], is integrated in closed form as
// eps^a / (a B(a,b)) and eps^b / (b B(a,b)) and carried as two tail atoms at
// lambda = 0 and lambda = 1. Node positions do not depend on (a, b), so the
// rule is differentiable in the shape parameters.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hierfdr/numerics.hpp"

namespace hierfdr {

class BetaQuadrature {
public:
    struct Node {
        double x;        // lambda
        double log_x;    // log(lambda), accurate near 0
        double log_1mx;  // log(1 - lambda), accurate near 1
        double weight;   // Lebesgue quadrature weight
    };

    /// Masses of the Beta law on the rule, plus the two endpoint atoms.
    struct Masses {
        std::vector<double> node;  // weight_k * Beta(x_k | a, b)
        double left_tail = 0.0;    // mass on [0, eps], placed at lambda = 0
        double right_tail = 0.0;   // mass on [1 - eps, 1], placed at lambda = 1

        double total() const {
            double s = left_tail + right_tail;
            for (double m : node) s += m;
            return s;
        }
    };

    static constexpr int kRefineLevels = 24;
    static constexpr double kRefineRatio = 0.25;

    explicit BetaQuadrature(const UnitIntervalGrid& grid) {
        grid.validate();
        const std::size_t n = grid.size();
        std::vector<double> edges(n + 1, 0.0);
        for (std::size_t j = 0; j < n; ++j) edges[j + 1] = edges[j] + grid.weights[j];
        edges[n] = 1.0;
        for (std::size_t j = 0; j < n; ++j)
            if (!(grid.nodes[j] >= edges[j] && grid.nodes[j] <= edges[j + 1]))
                throw std::invalid_argument("BetaQuadrature: grid node lies outside the cell implied by its weights");

        const double h_left = edges[1];
        const double h_right = 1.0 - edges[n - 1];
        add_endpoint_cell(h_left, false);
        for (std::size_t j = 1; j + 1 < n; ++j) add_interior_cell(edges[j], edges[j + 1]);
        add_endpoint_cell(h_right, true);
        eps_left_ = h_left * std::pow(kRefineRatio, kRefineLevels);
        eps_right_ = h_right * std::pow(kRefineRatio, kRefineLevels);
        log_eps_left_ = std::log(eps_left_);
        log_eps_right_ = std::log(eps_right_);
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    double eps_left() const { return eps_left_; }
    double eps_right() const { return eps_right_; }
    double log_eps_left() const { return log_eps_left_; }
    double log_eps_right() const { return log_eps_right_; }

    Masses masses(double a, double b) const {
        if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
            throw std::domain_error("BetaQuadrature: shape parameters must be positive and finite");
        const double lb = log_beta_fn(a, b);
        Masses m;
        m.node.resize(nodes_.size());
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            const Node& nd = nodes_[k];
            m.node[k] = nd.weight * std::exp((a - 1.0) * nd.log_x + (b - 1.0) * nd.log_1mx - lb);
        }
        m.left_tail = std::exp(a * log_eps_left_ - std::log(a) - lb);
        m.right_tail = std::exp(b * log_eps_right_ - std::log(b) - lb);
        return m;
    }

    /// int g(lambda) Beta(lambda|a,b) dlambda; g is evaluated at 0 and 1 for the tail atoms.
    template <class F>
    double expectation(double a, double b, F&& g) const {
        const Masses m = masses(a, b);
        double s = m.left_tail * g(0.0) + m.right_tail * g(1.0);
        for (std::size_t k = 0; k < nodes_.size(); ++k) s += m.node[k] * g(nodes_[k].x);
        return s;
    }

private:
    static constexpr std::array<double, 4> kGaussX{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                    0.8611363115940526};
    static constexpr std::array<double, 4> kGaussW{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                    0.3478548451374538};

    void add_interior_cell(double lo, double hi) {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (std::size_t i = 0; i < kGaussX.size(); ++i) {
            const double x = mid + half * kGaussX[i];
            nodes_.push_back({x, std::log(x), std::log1p(-x), half * kGaussW[i]});
        }
    }

    // Geometric sub-cells [h r^{l+1}, h r^l] of the cell adjacent to an endpoint, integrated in
    // t = log(distance to the endpoint).
    void add_endpoint_cell(double h, bool at_one) {
        std::vector<Node> cell;
        const double log_ratio = std::log(kRefineRatio);
        for (int level = 0; level < kRefineLevels; ++level) {
            const double t_hi = std::log(h) + level * log_ratio;
            const double t_lo = t_hi + log_ratio;
            const double half = 0.5 * (t_hi - t_lo);
            const double mid = 0.5 * (t_hi + t_lo);
            for (std::size_t i = 0; i < kGaussX.size(); ++i) {
                const double t = mid + half * kGaussX[i];
                const double d = std::exp(t);
                const double w = half * kGaussW[i] * d;
                if (at_one)
                    cell.push_back({1.0 - d, std::log1p(-d), t, w});
                else
                    cell.push_back({d, t, std::log1p(-d), w});
            }
        }
        // keep nodes ordered by lambda
        if (at_one) {
            std::sort(cell.begin(), cell.end(), [](const Node& l, const Node& r) { return l.log_1mx > r.log_1mx; });
        } else {
            std::sort(cell.begin(), cell.end(), [](const Node& l, const Node& r) { return l.log_x < r.log_x; });
        }
        nodes_.insert(nodes_.end(), cell.begin(), cell.end());
    }

    std::vector<Node> nodes_;
    double eps_left_ = 0.0;
    double eps_right_ = 0.0;
    double log_eps_left_ = 0.0;
    double log_eps_right_ = 0.0;
};

}  // namespace hierfdr
