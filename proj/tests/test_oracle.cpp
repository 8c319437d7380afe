#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gardner/gardner.hpp"

using namespace gardner;
using namespace gardner::oracle;
using std::numbers::pi;

TEST_CASE("soliton profile satisfies the stationary ODE", "[oracle]") {
    const GridSpec g(40.0, 1024);
    for (double c : {0.05, 0.3, 1.0, 2.5}) {
        const GardnerSoliton sol(g, c, 1.5);
        CHECK(sol.residual(0.0) <= kSolitonResidualTolerance);
        CHECK(sol.residual(3.7) <= kSolitonResidualTolerance);
        CHECK(sol.profile(0.0) == Catch::Approx(sol.amplitude()));
        CHECK(sol.profile(0.0) > sol.profile(0.5));
    }
    CHECK_THROWS_AS(GardnerSoliton(g, 0.0), InvalidInput);
    CHECK_THROWS_AS(GardnerSoliton(g, -1.0), InvalidInput);
}

TEST_CASE("soliton second derivative agrees with the spectral derivative", "[oracle]") {
    const GridSpec g(40.0, 1024);
    const GardnerSoliton sol(g, 0.3);
    const auto u = sol.sample(0.0);
    const auto uxx = inverse(spectral_derivative(forward(u), 2));
    const auto exact = RealGridFunction::sample(g, [&](double x) { return sol.profile_second_derivative(x); });
    // The edge mismatch of the truncated profile limits agreement.
    CHECK(sup_distance(uxx, exact) <= 5e-8);
}

TEST_CASE("soliton snapshots are spectral translates", "[oracle]") {
    const GridSpec g(40.0, 1024);
    const GardnerSoliton sol(g, 0.3, -2.0);
    const double t1 = 4.0;
    const auto F0 = forward(sol.sample(0.0));
    std::vector<Complex> shifted(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        shifted[j] = F0[j] * std::exp(Complex(0.0, -g.xi(j) * sol.speed() * t1));
    }
    CHECK(sup_distance(inverse(SpectralFunction(g, shifted)), sol.sample(t1)) <= 1e-10);
    CHECK(sol.boundary_magnitude(0.0) < 1e-8);
}

TEST_CASE("ifrk4 of zero data is zero", "[oracle]") {
    const GridSpec g(30.0, 64);
    CHECK(ifrk4_solve(RealGridFunction::zeros(g), 1.0, 0.01) == RealGridFunction::zeros(g));
    CHECK_THROWS_AS(ifrk4_solve(RealGridFunction::zeros(g), -1.0, 0.01), InvalidInput);
    CHECK_THROWS_AS(ifrk4_solve(RealGridFunction::zeros(g), 1.0, 0.0), InvalidInput);
}

TEST_CASE("ifrk4 follows the Airy flow for small data", "[oracle]") {
    const GridSpec g(30.0, 256);
    const auto phi = gaussian_profile(g, 1e-4, 2.0, 0.0);
    const auto u = ifrk4_solve(phi, 1.0, 1e-2);
    CHECK(sup_distance(u, inverse(airy_propagator(forward(phi), 1.0))) <= 1e-7);
}

TEST_CASE("ifrk4 flags steps that under-resolve the dispersion", "[oracle]") {
    const GridSpec g(30.0, 256);
    Ifrk4Diagnostics diag;
    (void)ifrk4_solve(gaussian_profile(g, 1e-3, 2.0, 0.0), 0.1, 0.05, &diag);
    CHECK(diag.dt_warning);
    CHECK(diag.steps == 2);
    (void)ifrk4_solve(gaussian_profile(g, 1e-3, 2.0, 0.0), 1e-4, 1e-5, &diag);
    CHECK_FALSE(diag.dt_warning);
    CHECK(diag.dt_used == Catch::Approx(1e-5));
}

TEST_CASE("ifrk4 converges at fourth order", "[oracle]") {
    const GridSpec g(30.0, 128);
    const auto phi = sech_profile(g, 1.0, 1.5, 0.0);
    std::vector<RealGridFunction> u;
    for (int i = 0; i < 5; ++i) u.push_back(ifrk4_solve(phi, 1.0, 0.04 / (1 << i)));
    for (std::size_t i = 0; i + 2 < u.size(); ++i) {
        const double rate = std::log2(sup_distance(u[i], u[i + 1]) / sup_distance(u[i + 1], u[i + 2]));
        CHECK(rate >= 3.7);
        CHECK(rate <= 4.3);
    }
}

TEST_CASE("ifrk4 carries the soliton to t = 5", "[oracle][slow]") {
    const GridSpec g(40.0, 1024);
    const GardnerSoliton sol(g, 0.3);
    const auto phi = sol.sample(0.0);
    const auto u = ifrk4_solve(phi, 5.0, 1e-3);
    CHECK(sup_distance(u, sol.sample(5.0)) <= 1e-6);
    const double m0 = invariant_mass(phi), p0 = invariant_momentum(phi);
    CHECK(std::abs(invariant_mass(u) - m0) <= 1e-9 * m0);
    CHECK(std::abs(invariant_momentum(u) - p0) <= 1e-9 * p0);
}

TEST_CASE("ifrk4 rejects blow-up", "[oracle]") {
    const GridSpec g(10.0, 64);
    CHECK_THROWS_AS(ifrk4_solve(gaussian_profile(g, 1e60, 0.5, 0.0), 1.0, 0.5), BlowUpError);
}

TEST_CASE("invariants of simple fields", "[oracle]") {
    const GridSpec g(30.0, 256);
    CHECK(invariant_mass(RealGridFunction::zeros(g)) == 0.0);
    CHECK(invariant_momentum(RealGridFunction::zeros(g)) == 0.0);
    const auto odd = RealGridFunction::sample(g, [](double x) { return x * std::exp(-x * x); });
    CHECK(std::abs(invariant_mass(odd)) <= 1e-14);
    const auto gauss = gaussian_profile(g, 1.0, 1.0, 0.0);
    CHECK(invariant_mass(gauss) == Catch::Approx(std::sqrt(pi)).epsilon(1e-13));
    CHECK(invariant_momentum(gauss) == Catch::Approx(std::sqrt(pi / 2.0)).epsilon(1e-13));
}
