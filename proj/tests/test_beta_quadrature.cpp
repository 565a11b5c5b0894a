#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hierfdr/beta_quadrature.hpp"
#include "hierfdr/neural_prior.hpp"
#include "hierfdr/two_groups.hpp"
#include "oracles.hpp"

using namespace hierfdr;
using Catch::Approx;

TEST_CASE("quadrature reproduces Beta moments", "[quadrature]") {
    const BetaQuadrature quad(make_lambda_grid(100));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(std::log(0.1), std::log(100.0));
    for (int i = 0; i < 100; ++i) {
        const double a = std::exp(u(rng)), b = std::exp(u(rng));
        const double mean = quad.expectation(a, b, [](double l) { return l; });
        const double second = quad.expectation(a, b, [](double l) { return l * l; });
        CHECK(quad.masses(a, b).total() == Approx(1.0).margin(1e-6));
        CHECK(mean == Approx(a / (a + b)).margin(1e-6));
        CHECK(second == Approx(a * (a + 1.0) / ((a + b) * (a + b + 1.0))).margin(1e-6));
    }
}

TEST_CASE("posterior and marginal match the fine oracle", "[quadrature]") {
    const BetaQuadrature quad(make_lambda_grid(100));
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> log_shape(std::log(0.1), std::log(100.0));
    std::uniform_real_distribution<double> zdist(-6.0, 6.0);
    std::uniform_real_distribution<double> f1dist(0.0, 0.4);
    double worst_w = 0.0, worst_l = 0.0;
    for (int i = 0; i < 60; ++i) {
        const double a = std::exp(log_shape(rng)), b = std::exp(log_shape(rng));
        const double f0 = normal_pdf(zdist(rng), {});
        const double f1 = f1dist(rng);
        worst_w = std::max(worst_w, std::abs(posterior_beta(a, b, f0, f1, quad) - oracle::posterior_beta(a, b, f0, f1)));
        worst_l = std::max(worst_l, std::abs(marginal_loglik(a, b, f0, f1, quad) - oracle::marginal_loglik(a, b, f0, f1)));
    }
    CHECK(worst_w <= 1e-4);
    CHECK(worst_l <= 1e-4);
}

TEST_CASE("marginal likelihood depends on the prior mean only", "[quadrature]") {
    const BetaQuadrature quad(make_lambda_grid(100));
    const double f0 = 0.05, f1 = 0.2;
    for (double s : {0.5, 2.0, 20.0, 150.0}) {
        const double m = 0.3;
        const double exact = std::log(f0 + (f1 - f0) * m);
        CHECK(marginal_loglik(m * s, (1.0 - m) * s, f0, f1, quad) == Approx(exact).margin(1e-6));
    }
}

TEST_CASE("rule rejects an inconsistent grid", "[quadrature]") {
    UnitIntervalGrid g;
    g.nodes = {0.1, 0.2};
    g.weights = {0.5, 0.5};
    CHECK_THROWS(BetaQuadrature(g));
}
