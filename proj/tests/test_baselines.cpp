#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hierfdr/baselines.hpp"
#include "oracles.hpp"

using namespace hierfdr;
using Catch::Approx;

namespace {

bool subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("bh examples", "[baselines]") {
    const std::vector<double> p = {0.01, 0.02, 0.04, 0.9};
    CHECK(bh(p, 0.05) == std::vector<std::size_t>{0, 1});
    CHECK(bh(std::vector<double>(6, 1.0), 0.05).empty());
    CHECK(bh(std::vector<double>(6, 0.0), 0.05).size() == 6);
    CHECK(bh(std::vector<double>{}, 0.05).empty());

    // the tied cutoff value is rejected everywhere it appears
    const std::vector<double> tied = {0.02, 0.5, 0.02, 0.02};
    CHECK(bh(tied, 0.1) == std::vector<std::size_t>{0, 2, 3});

    const std::vector<double> bad = {0.1, 1.2};
    CHECK_THROWS(bh(bad, 0.1));
}

TEST_CASE("bh matches threshold enumeration", "[baselines]") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, 400);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> p(static_cast<std::size_t>(len(rng)));
        const double signal = u(rng);
        for (double& v : p) v = u(rng) < signal ? std::pow(u(rng), 8.0) : u(rng);
        // a few exact duplicates
        if (p.size() > 3) p[1] = p[0];
        const double alpha = 0.01 + 0.25 * u(rng);
        CHECK(bh(p, alpha) == oracle::bh_enumerate(p, alpha));
    }
}

TEST_CASE("bh is monotone in alpha and Storey rejects a superset", "[baselines]") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> p(300);
        for (double& v : p) v = u(rng) < 0.3 ? std::pow(u(rng), 5.0) : u(rng);
        std::vector<std::size_t> prev;
        for (double alpha : {0.01, 0.05, 0.1, 0.2}) {
            const auto r = bh(p, alpha);
            CHECK(subset(prev, r));
            CHECK(subset(r, storey_bh(p, alpha)));
            prev = r;
        }
    }
}

TEST_CASE("storey_pi0", "[baselines]") {
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(10000);
    for (double& v : p) v = u(rng);
    CHECK(storey_pi0(p, 0.5) == Approx(1.0).margin(0.05));
    CHECK(storey_pi0(std::vector<double>(20, 0.0), 0.5) == Approx(1.0 / 20.0));
    CHECK(storey_pi0(std::vector<double>(20, 1.0), 0.5) == 1.0);
    CHECK_THROWS(storey_pi0(p, 1.0));
}

TEST_CASE("storey_bh", "[baselines]") {
    // pi0_hat = 1 exactly: 50 of 100 above the tuning point
    std::vector<double> p;
    for (int i = 0; i < 50; ++i) p.push_back(0.001 * (i + 1));
    for (int i = 0; i < 50; ++i) p.push_back(0.51 + 0.009 * i);
    REQUIRE(storey_pi0(p) == 1.0);
    CHECK(storey_bh(p, 0.1) == bh(p, 0.1));

    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> mixed(2000);
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = i % 2 == 0 ? 1e-4 * u(rng) : u(rng);
    const auto s = storey_bh(mixed, 0.05), b = bh(mixed, 0.05);
    CHECK(subset(b, s));
    CHECK(s.size() > b.size());

    CHECK(storey_bh(std::vector<double>(10, 1.0), 0.1).empty());
}

TEST_CASE("bh controls FDR under the global null", "[baselines]") {
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double alpha = 0.1;
    const int reps = 200;
    double fdr = 0.0;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> p(2000);
        for (double& v : p) v = u(rng);
        // every rejection is false, so FDP is 1 whenever anything is rejected
        fdr += bh(p, alpha).empty() ? 0.0 : 1.0;
    }
    fdr /= reps;
    const double se = std::sqrt(alpha * (1.0 - alpha) / reps);
    CHECK(fdr <= alpha + 2.0 * se);
}
