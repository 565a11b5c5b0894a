// Bivariate linear regression of (log a', log b') on auxiliary covariates. The fitted values
// replace the network outputs as the final Beta parameters.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hierfdr/matrix.hpp"
#include "hierfdr/neural_prior.hpp"

namespace hierfdr {

struct BivariateRegression {
    double mu_a = 0.0;
    double mu_b = 0.0;
    std::vector<double> delta_a;
    std::vector<double> delta_b;
    // standard errors, intercept first
    std::vector<double> se_a;
    std::vector<double> se_b;
    // residual covariance (sigma_aa, sigma_ab, sigma_bb), denominator n - q - 1
    double sigma_aa = 0.0;
    double sigma_ab = 0.0;
    double sigma_bb = 0.0;

    std::size_t dim() const { return delta_a.size(); }

    double fitted_log_a(std::span<const double> aux) const { return mu_a + dot(delta_a, aux); }
    double fitted_log_b(std::span<const double> aux) const { return mu_b + dot(delta_b, aux); }

private:
    static double dot(const std::vector<double>& c, std::span<const double> v) {
        if (v.size() != c.size()) throw std::invalid_argument("BivariateRegression: auxiliary dimension mismatch");
        double s = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * v[j];
        return s;
    }
};

/// Equation-by-equation OLS of each response on [1, X_aux] through a column-pivoted QR of the
/// shared design. Throws when the design is rank deficient, naming the dependent columns
/// (column 0 is the intercept, column j the j-th auxiliary feature).
inline BivariateRegression fit_regression(std::span<const double> log_a, std::span<const double> log_b,
                                          const Matrix& aux) {
    const std::size_t n = aux.rows;
    const std::size_t q = aux.cols;
    if (log_a.size() != n || log_b.size() != n) throw std::invalid_argument("fit_regression: length mismatch");
    if (n <= q + 1) throw std::invalid_argument("fit_regression: need more tests than auxiliary features plus one");
    for (double v : aux.data)
        if (!std::isfinite(v)) throw std::invalid_argument("fit_regression: non-finite auxiliary covariate");

    const auto p = static_cast<Eigen::Index>(q + 1);
    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), p);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        design(r, 0) = 1.0;
        for (std::size_t j = 0; j < q; ++j) design(r, static_cast<Eigen::Index>(j + 1)) = aux(i, j);
        y(r, 0) = log_a[i];
        y(r, 1) = log_b[i];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        std::string cols;
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p; ++k) cols += (cols.empty() ? "" : ", ") + std::to_string(perm(k));
        throw std::invalid_argument("fit_regression: rank-deficient design; dependent columns: " + cols);
    }
    const Eigen::MatrixXd coef = qr.solve(y);
    const Eigen::MatrixXd resid = y - design * coef;
    const double dof = static_cast<double>(n - q - 1);
    const Eigen::Matrix2d cov = resid.transpose() * resid / dof;

    // (D^T D)^{-1} = P R^{-1} R^{-T} P^T
    const Eigen::MatrixXd r_upper = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r_upper.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd perm_mat = qr.colsPermutation();
    const Eigen::MatrixXd xtx_inv = perm_mat * (r_inv * r_inv.transpose()) * perm_mat.transpose();

    BivariateRegression reg;
    reg.mu_a = coef(0, 0);
    reg.mu_b = coef(0, 1);
    for (Eigen::Index j = 1; j < p; ++j) {
        reg.delta_a.push_back(coef(j, 0));
        reg.delta_b.push_back(coef(j, 1));
    }
    reg.sigma_aa = cov(0, 0);
    reg.sigma_ab = 0.5 * (cov(0, 1) + cov(1, 0));
    reg.sigma_bb = cov(1, 1);
    for (Eigen::Index j = 0; j < p; ++j) {
        reg.se_a.push_back(std::sqrt(std::max(0.0, reg.sigma_aa * xtx_inv(j, j))));
        reg.se_b.push_back(std::sqrt(std::max(0.0, reg.sigma_bb * xtx_inv(j, j))));
    }
    return reg;
}

/// Final Beta parameters from the fitted values, exp(fitted log) clamped to [floor, ceiling].
inline BetaPriorField adjust(const BetaPriorField& field, const BivariateRegression& reg, const Matrix& aux,
                             double floor = MlpModel::kDefaultFloor, double ceiling = MlpModel::kDefaultCeiling) {
    if (field.adjusted) throw std::logic_error("adjust: prior field has already been adjusted");
    if (aux.rows != field.size() || aux.cols != reg.dim())
        throw std::invalid_argument("adjust: auxiliary covariates do not match the field or regression");
    BetaPriorField out = field;
    for (std::size_t i = 0; i < aux.rows; ++i) {
        out.a[i] = std::clamp(std::exp(reg.fitted_log_a(aux.row(i))), floor, ceiling);
        out.b[i] = std::clamp(std::exp(reg.fitted_log_b(aux.row(i))), floor, ceiling);
    }
    out.adjusted = true;
    return out;
}

/// Fits the regression to the field's raw parameters and adjusts it.
inline BetaPriorField fit_and_adjust(const BetaPriorField& field, const Matrix& aux, BivariateRegression* reg_out = nullptr) {
    std::vector<double> la(field.size()), lb(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        la[i] = std::log(field.a_raw[i]);
        lb[i] = std::log(field.b_raw[i]);
    }
    const BivariateRegression reg = fit_regression(la, lb, aux);
    if (reg_out) *reg_out = reg;
    return adjust(field, reg, aux);
}

inline nlohmann::json to_json(const BivariateRegression& r) {
    return {{"mu_a", r.mu_a},
            {"mu_b", r.mu_b},
            {"delta_a", r.delta_a},
            {"delta_b", r.delta_b},
            {"se_a", r.se_a},
            {"se_b", r.se_b},
            {"residual_cov", {{"sigma_aa", r.sigma_aa}, {"sigma_ab", r.sigma_ab}, {"sigma_bb", r.sigma_bb}}}};
}

}  // namespace hierfdr
