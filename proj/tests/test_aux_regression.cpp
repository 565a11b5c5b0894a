#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hierfdr/aux_regression.hpp"
#include "oracles.hpp"

using namespace hierfdr;
using Catch::Approx;

namespace {

struct RegData {
    Matrix aux;
    std::vector<double> ya, yb;
};

RegData regression_data(std::size_t n, std::size_t q, std::uint64_t seed, double noise) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    RegData d{Matrix(n, q), std::vector<double>(n), std::vector<double>(n)};
    // correlated columns
    for (std::size_t i = 0; i < n; ++i) {
        const double common = nd(rng);
        for (std::size_t j = 0; j < q; ++j) d.aux(i, j) = 0.6 * common + nd(rng) + static_cast<double>(j);
    }
    std::vector<double> ca(q), cb(q);
    for (std::size_t j = 0; j < q; ++j) {
        ca[j] = nd(rng);
        cb[j] = nd(rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sa = 0.4, sb = -1.1;
        for (std::size_t j = 0; j < q; ++j) {
            sa += ca[j] * d.aux(i, j);
            sb += cb[j] * d.aux(i, j);
        }
        d.ya[i] = sa + noise * nd(rng);
        d.yb[i] = sb + noise * nd(rng);
    }
    return d;
}

std::vector<std::vector<double>> design_rows(const Matrix& aux) {
    std::vector<std::vector<double>> rows(aux.rows);
    for (std::size_t i = 0; i < aux.rows; ++i) {
        rows[i].push_back(1.0);
        for (std::size_t j = 0; j < aux.cols; ++j) rows[i].push_back(aux(i, j));
    }
    return rows;
}

}  // namespace

TEST_CASE("intercept-only regression", "[regression]") {
    const std::vector<double> la = {0.1, 0.5, -0.3, 1.0}, lb = {2.0, 1.0, 0.0, 1.0};
    const Matrix none(4, 0);
    const auto reg = fit_regression(la, lb, none);
    CHECK(reg.mu_a == Approx(0.325).epsilon(1e-14));
    CHECK(reg.mu_b == Approx(1.0).epsilon(1e-14));
    CHECK(reg.dim() == 0);

    std::vector<double> a_raw, b_raw;
    for (std::size_t i = 0; i < 4; ++i) {
        a_raw.push_back(std::exp(la[i]));
        b_raw.push_back(std::exp(lb[i]));
    }
    const auto adj = adjust(BetaPriorField::from_raw(a_raw, b_raw), reg, none);
    CHECK(adj.adjusted);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(adj.a[i] == Approx(std::exp(0.325)).epsilon(1e-12));
        CHECK(adj.b[i] == Approx(std::exp(1.0)).epsilon(1e-12));
        CHECK(adj.a_raw[i] == a_raw[i]);
    }
}

TEST_CASE("regression matches the normal equations", "[regression]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = regression_data(200 + 30 * seed, 1 + seed % 6, seed, 0.5);
        const auto reg = fit_regression(d.ya, d.yb, d.aux);
        const auto rows = design_rows(d.aux);
        const auto ba = oracle::normal_equations(rows, d.ya);
        const auto bb = oracle::normal_equations(rows, d.yb);
        CHECK(std::abs(reg.mu_a - ba[0]) <= 1e-8);
        CHECK(std::abs(reg.mu_b - bb[0]) <= 1e-8);
        for (std::size_t j = 0; j < reg.dim(); ++j) {
            CHECK(std::abs(reg.delta_a[j] - ba[j + 1]) <= 1e-8);
            CHECK(std::abs(reg.delta_b[j] - bb[j + 1]) <= 1e-8);
        }
    }
}

TEST_CASE("noiseless responses are recovered exactly", "[regression]") {
    const auto d = regression_data(150, 5, 77, 0.0);
    const auto reg = fit_regression(d.ya, d.yb, d.aux);
    CHECK(reg.sigma_aa <= 1e-8);
    CHECK(reg.sigma_bb <= 1e-8);
    CHECK(std::abs(reg.sigma_ab) <= 1e-8);
    for (std::size_t i = 0; i < d.aux.rows; ++i) CHECK(std::abs(reg.fitted_log_a(d.aux.row(i)) - d.ya[i]) <= 1e-8);

    std::vector<double> a_raw, b_raw;
    for (std::size_t i = 0; i < d.aux.rows; ++i) {
        a_raw.push_back(std::exp(d.ya[i]));
        b_raw.push_back(std::exp(d.yb[i]));
    }
    const auto adj = adjust(BetaPriorField::from_raw(a_raw, b_raw), reg, d.aux);
    for (std::size_t i = 0; i < d.aux.rows; ++i) {
        if (a_raw[i] < 1e-3 || a_raw[i] > 1e3 || b_raw[i] < 1e-3 || b_raw[i] > 1e3) continue;
        CHECK(std::abs(adj.a[i] - a_raw[i]) <= 1e-6 * std::max(1.0, a_raw[i]));
        CHECK(std::abs(adj.b[i] - b_raw[i]) <= 1e-6 * std::max(1.0, b_raw[i]));
    }
}

TEST_CASE("residuals are orthogonal to the design", "[regression]") {
    const auto d = regression_data(500, 4, 78, 1.0);
    const auto reg = fit_regression(d.ya, d.yb, d.aux);
    const double n = static_cast<double>(d.aux.rows);
    for (std::size_t c = 0; c <= d.aux.cols; ++c) {
        double ra = 0.0, rb = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < d.aux.rows; ++i) {
            const double col = c == 0 ? 1.0 : d.aux(i, c - 1);
            ra += col * (d.ya[i] - reg.fitted_log_a(d.aux.row(i)));
            rb += col * (d.yb[i] - reg.fitted_log_b(d.aux.row(i)));
            scale = std::max(scale, std::abs(col));
        }
        CHECK(std::abs(ra) <= 1e-8 * n * scale);
        CHECK(std::abs(rb) <= 1e-8 * n * scale);
    }
    CHECK(reg.sigma_aa * reg.sigma_bb - reg.sigma_ab * reg.sigma_ab >= 0.0);
}

TEST_CASE("fitted values are invariant to affine reparameterization", "[regression]") {
    const auto d = regression_data(300, 3, 79, 0.7);
    Matrix t = d.aux;
    for (std::size_t i = 0; i < t.rows; ++i) {
        const double c0 = d.aux(i, 0), c1 = d.aux(i, 1), c2 = d.aux(i, 2);
        t(i, 0) = 3.0 * c0 - 2.0 + 0.5 * c1;
        t(i, 1) = -0.2 * c1 + 10.0;
        t(i, 2) = c2 + c0;
    }
    const auto r1 = fit_regression(d.ya, d.yb, d.aux);
    const auto r2 = fit_regression(d.ya, d.yb, t);
    for (std::size_t i = 0; i < t.rows; ++i) {
        CHECK(std::abs(r1.fitted_log_a(d.aux.row(i)) - r2.fitted_log_a(t.row(i))) <= 1e-8);
        CHECK(std::abs(r1.fitted_log_b(d.aux.row(i)) - r2.fitted_log_b(t.row(i))) <= 1e-8);
    }
}

TEST_CASE("noise covariates shrink toward the geometric mean", "[regression]") {
    std::mt19937_64 rng(80);
    std::normal_distribution<double> nd(0.0, 1.0);
    const std::size_t n = 20000, q = 5;
    Matrix aux(n, q);
    for (double& v : aux.data) v = nd(rng);
    std::vector<double> la(n), lb(n);
    for (std::size_t i = 0; i < n; ++i) {
        la[i] = 0.5 + 0.8 * nd(rng);
        lb[i] = 1.5 + 0.3 * nd(rng);
    }
    const auto reg = fit_regression(la, lb, aux);
    for (std::size_t j = 0; j < q; ++j) {
        CHECK(std::abs(reg.delta_a[j]) <= 3.0 * reg.se_a[j + 1]);
        CHECK(std::abs(reg.delta_b[j]) <= 3.0 * reg.se_b[j + 1]);
    }
    CHECK(reg.se_a[0] == Approx(0.8 / std::sqrt(static_cast<double>(n))).epsilon(0.05));
}

TEST_CASE("adjustment keeps parameters positive, finite and clamped", "[regression]") {
    const std::size_t n = 100;
    Matrix aux(n, 1);
    std::vector<double> a_raw(n), b_raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        aux(i, 0) = static_cast<double>(i);
        a_raw[i] = std::exp(0.3 * static_cast<double>(i) - 15.0);
        b_raw[i] = 1.0;
    }
    const auto field = BetaPriorField::from_raw(a_raw, b_raw);
    const auto adj = fit_and_adjust(field, aux);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(adj.a[i] >= 1e-3);
        CHECK(adj.a[i] <= 1e3);
        CHECK(std::isfinite(adj.b[i]));
    }
    CHECK(adj.a.front() == 1e-3);
    CHECK(adj.a.back() == 1e3);
    CHECK_THROWS_AS(fit_and_adjust(adj, aux), std::logic_error);
}

TEST_CASE("regression errors", "[regression]") {
    Matrix aux(10, 3);
    std::mt19937_64 rng(81);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (double& v : aux.data) v = nd(rng);
    for (std::size_t i = 0; i < 10; ++i) aux(i, 2) = 2.0 * aux(i, 0) - aux(i, 1);
    std::vector<double> y(10, 1.0);
    CHECK_THROWS_WITH(fit_regression(y, y, aux), Catch::Matchers::ContainsSubstring("dependent columns"));

    Matrix small(4, 3);
    std::vector<double> y4(4, 0.0);
    CHECK_THROWS(fit_regression(y4, y4, small));
    std::vector<double> y5(5, 0.0);
    CHECK_THROWS(fit_regression(y5, y4, Matrix(4, 1)));

    const auto reg = fit_regression(y, y, Matrix(10, 0));
    const auto field = BetaPriorField::from_raw(std::vector<double>(10, 1.0), std::vector<double>(10, 1.0));
    CHECK_THROWS(adjust(field, reg, Matrix(9, 0)));
    const auto j = to_json(reg);
    for (const char* key : {"mu_a", "mu_b", "delta_a", "delta_b", "se_a", "se_b", "residual_cov"}) CHECK(j.contains(key));
}
