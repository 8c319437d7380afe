#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "gardner/gardner.hpp"
#include "support.hpp"

using namespace gardner;
using std::numbers::pi;

namespace {

// Direct predicate scan over every q, independent of the bisection.
double scan_step(int s, double r) {
    double best = 0.0;
    for (int q = kMaxStepExponent; q >= 0; --q) {
        const double T = std::ldexp(1.0, -q);
        if (condition_prop22(s, T, r) && condition_prop23(s, T, r)) best = T;
    }
    return best;
}

}  // namespace

TEST_CASE("alpha_const examples", "[stepper]") {
    CHECK(alpha_const(3, 1.0) == Catch::Approx(14.8564064606).epsilon(1e-11));
    CHECK(alpha_const(3, 1e-30) == Catch::Approx(1.0).epsilon(1e-13));
    for (int s = 1; s < 8; ++s) {
        for (double T : {1e-8, 1e-4, 0.5}) {
            CHECK(alpha_const(s, 2.0 * T) > alpha_const(s, T));
            CHECK(alpha_const(s + 1, T) > alpha_const(s, T));
        }
    }
    CHECK_THROWS_AS(alpha_const(3, 0.0), InvalidInput);
}

TEST_CASE("step conditions at frozen points", "[stepper]") {
    CHECK_FALSE(condition_prop22(3, 1.0, 1.0));
    CHECK(condition_prop22(3, 1e-6, 1.0));
    CHECK(condition_prop23(3, 1e-6, 0.0));
    CHECK_FALSE(condition_prop23(3, 1.0, 0.0));
    for (double T : {1e-12, 1e-3, 1.0, 1e6}) CHECK(condition_prop22(3, T, 0.0));
    for (double r : {0.0, 0.5, 2.0}) CHECK_FALSE(condition_prop23(3, 1e3, r));
}

TEST_CASE("condition_prop23 implies condition_prop22 over a sweep", "[stepper]") {
    for (int s = 3; s <= 6; ++s) {
        for (int e = -80; e <= 0; ++e) {
            const double T = std::pow(10.0, e / 10.0);
            for (int k = 0; k <= 40; ++k) {
                const double r = 0.05 * k;
                if (condition_prop23(s, T, r)) CHECK(condition_prop22(s, T, r));
            }
        }
    }
}

TEST_CASE("choose_step frozen values", "[stepper]") {
    CHECK(choose_step(3, 0.0) == std::ldexp(1.0, -13));
    CHECK(choose_step(3, 1.0) == std::ldexp(1.0, -18));
    CHECK(choose_step(3, 2.0) == std::ldexp(1.0, -20));
    CHECK(choose_step(4, 0.5) == std::ldexp(1.0, -16));
    CHECK(choose_step(6, 2.0) == std::ldexp(1.0, -21));
}

TEST_CASE("choose_step is the maximal passing dyadic and monotone in r", "[stepper][property]") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> ur(0.0, 5.0);
    for (int s = 3; s <= 8; ++s) {
        double prev = 1.0;
        for (int k = 0; k <= 50; ++k) {
            const double r = 0.1 * k;
            const double T = choose_step(s, r);
            CHECK(T == scan_step(s, r));
            CHECK(condition_prop22(s, T, r));
            CHECK(condition_prop23(s, T, r));
            if (T < 1.0) CHECK_FALSE((condition_prop22(s, 2 * T, r) && condition_prop23(s, 2 * T, r)));
            CHECK(T <= prev);
            prev = T;
        }
        const double r1 = ur(rng), r2 = ur(rng);
        CHECK(choose_step(s, std::min(r1, r2)) >= choose_step(s, std::max(r1, r2)));
    }
}

TEST_CASE("choose_step rejects bad or hopeless norms", "[stepper]") {
    CHECK_THROWS_AS(choose_step(3, -1.0), InvalidInput);
    CHECK_THROWS_AS(choose_step(3, std::nan("")), InvalidInput);
    CHECK_THROWS_AS(choose_step(3, 1e12), StepSelectionError);
}

TEST_CASE("reflect is an involution fixing even and negating odd data", "[stepper]") {
    const GridSpec g(30.0, 256);
    const auto even = gaussian_profile(g, 1.0, 2.0, 0.0);
    CHECK(reflect(even) == even);
    std::mt19937_64 rng(43);
    const auto f = gardner::testing::random_field(g, rng);
    CHECK(reflect(reflect(f)) == f);
    const auto odd = RealGridFunction::sample(g, [&](double x) { return std::sin(pi * x / g.half_length()); });
    const auto r = reflect(odd);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(r[i] + odd[i]) <= 1e-14);
}

TEST_CASE("zero data marches to zero with an empty ledger", "[stepper]") {
    const GridSpec g(30.0, 64);
    for (Mode mode : {Mode::fast, Mode::certified}) {
        MarchOptions opts;
        opts.mode = mode;
        opts.snapshot_times = {2e-5, 5e-5};
        const auto res = march_forward(RealGridFunction::zeros(g), 5e-5, 1e-6, SobolevIndex::certified(3), opts);
        REQUIRE(res.snapshots.size() == 2);
        for (const auto& snap : res.snapshots) CHECK(snap == RealGridFunction::zeros(g));
        CHECK(res.ledger.total() == 0.0);
        CHECK(res.ledger.steps_taken > 0);
    }
}

TEST_CASE("t = 0 returns the data exactly", "[stepper]") {
    const GridSpec g(30.0, 128);
    const auto phi = sech_profile(g, 0.4, 1.5, 1.0);
    for (Mode mode : {Mode::fast, Mode::certified}) {
        MarchOptions opts;
        opts.mode = mode;
        const auto res = solve_ivp(phi, 0.0, 1e-6, SobolevIndex::certified(3), opts);
        REQUIRE(res.snapshots.size() == 1);
        CHECK(res.snapshots[0] == phi);
        CHECK(res.ledger.steps_taken == 0);
    }
}

TEST_CASE("small data in fast mode follows the Airy flow", "[stepper]") {
    const GridSpec g(30.0, 256);
    const auto phi = gaussian_profile(g, 1e-4, 2.0, 0.0);
    MarchOptions opts;
    opts.fast_dt = 1e-3;
    const auto res = march_forward(phi, 0.5, 1e-10, SobolevIndex::certified(3), opts);
    const auto airy = inverse(airy_propagator(forward(phi), 0.5));
    CHECK(sup_distance(res.snapshots.back(), airy) <= 1e-6);
    CHECK(res.ledger.steps_taken == 500);
}

TEST_CASE("certified soliton march stays within its ledger", "[stepper]") {
    const GridSpec g(40.0, 512);
    const oracle::GardnerSoliton sol(g, 0.3);
    const auto phi = sol.sample(0.0);
    const double r = h_norm(forward(phi), 3);
    const double T = choose_step(3, r + 1.0);
    MarchOptions opts;
    opts.mode = Mode::certified;
    const auto res = march_forward(phi, 16 * T, 1e-4, SobolevIndex::certified(3), opts);
    CHECK(res.ledger.steps_taken == 16);
    CHECK(res.all_certified());
    CHECK(res.certified.back());
    for (const auto& p : res.plan_log) {
        CHECK(p.mode == Mode::certified);
        CHECK(condition_prop22(3, p.T, r));
        CHECK(condition_prop23(3, p.T, r));
    }
    CHECK(res.ledger.picard <= 1e-4 * 1.0001);
    CHECK(sup_distance(res.snapshots.back(), sol.sample(16 * T)) <= res.ledger.total() + 1e-6);
    const double m0 = oracle::invariant_momentum(phi);
    CHECK(std::abs(oracle::invariant_momentum(res.snapshots.back()) - m0) <= 1e-8 * m0);
}

TEST_CASE("steps shorten to land on snapshot times", "[stepper]") {
    const GridSpec g(30.0, 64);
    const auto phi = gaussian_profile(g, 0.1, 2.0, 0.0);
    MarchOptions opts;
    opts.fast_dt = 0.01;
    opts.snapshot_times = {0.025, 0.0, 0.05};
    const auto res = march_forward(phi, 0.05, 1e-8, SobolevIndex::certified(3), opts);
    REQUIRE(res.times == std::vector<double>{0.0, 0.025, 0.05});
    CHECK(res.snapshots[0] == phi);
    CHECK(res.plans_until[1] == 3);
    CHECK(res.plan_log[2].T == Catch::Approx(0.005));
    CHECK(res.plans_until[2] == 6);
    CHECK(res.ledgers.size() == 3);
    CHECK(res.norms.size() == 3);
    CHECK_FALSE(res.all_certified());
}

TEST_CASE("ledgers compose additively across a split march", "[stepper]") {
    const GridSpec g(40.0, 256);
    const auto phi = oracle::gardner_soliton(g, 0.3, 0.0, 0.0);
    const double T = choose_step(3, h_norm(forward(phi), 3) + 1.0);
    const double t1 = 6 * T, t2 = 10 * T, eps = 1e-5;
    MarchOptions opts;
    opts.mode = Mode::certified;
    const auto whole = march_forward(phi, t2, eps, SobolevIndex::certified(3), opts);
    const auto a = march_forward(phi, t1, eps * t1 / t2, SobolevIndex::certified(3), opts);
    const auto b = march_forward(a.snapshots.back(), t2 - t1, eps * (t2 - t1) / t2, SobolevIndex::certified(3), opts);
    CHECK(std::abs(whole.ledger.total() - (a.ledger.total() + b.ledger.total())) <= 1e-12);
    CHECK(whole.ledger.steps_taken == a.ledger.steps_taken + b.ledger.steps_taken);
}

TEST_CASE("input uncertainty compounds by 2 sqrt(3 + T) per step", "[stepper]") {
    const GridSpec g(30.0, 64);
    const auto phi = gaussian_profile(g, 0.05, 2.0, 0.0);
    MarchOptions opts;
    opts.mode = Mode::certified;
    opts.input_uncertainty_bits = 40;
    const double T = choose_step(3, h_norm(forward(phi), 3) + 1.0);
    const auto res = march_forward(phi, 3 * T, 1e-6, SobolevIndex::certified(3), opts);
    double expected = std::ldexp(1.0, -40);
    for (const auto& p : res.plan_log) expected *= 2.0 * std::sqrt(3.0 + p.T);
    CHECK(res.ledger.data == Catch::Approx(expected).epsilon(1e-14));
    CHECK(res.ledger.total() == res.ledger.picard + res.ledger.data);
}

TEST_CASE("bound violations flag every later snapshot", "[stepper]") {
    const GridSpec g(30.0, 64);
    const auto phi = gaussian_profile(g, 0.3, 2.0, 0.0);
    MarchOptions opts;
    opts.mode = Mode::certified;
    opts.slack = -1.0;
    const double T = choose_step(3, h_norm(forward(phi), 3) + 1.0);
    opts.snapshot_times = {T, 2 * T, 3 * T};
    const auto res = march_forward(phi, 3 * T, 1e-6, SobolevIndex::certified(3), opts);
    CHECK(res.uncertified_steps > 0);
    CHECK_FALSE(res.all_certified());
    for (bool c : res.certified) CHECK_FALSE(c);
}

TEST_CASE("march_forward validates its inputs", "[stepper]") {
    const GridSpec g(30.0, 64);
    const auto phi = gaussian_profile(g, 0.1, 2.0, 0.0);
    MarchOptions cert;
    cert.mode = Mode::certified;
    CHECK_THROWS_AS(march_forward(phi, 1.0, 1e-6, SobolevIndex::diagnostic(2), cert), InvalidInput);
    CHECK_THROWS_AS(march_forward(phi, -1.0, 1e-6, SobolevIndex::certified(3)), InvalidInput);
    CHECK_THROWS_AS(march_forward(phi, 1.0, 0.0, SobolevIndex::certified(3)), InvalidInput);
    MarchOptions odd;
    odd.M = 7;
    CHECK_THROWS_AS(march_forward(phi, 1.0, 1e-6, SobolevIndex::certified(3), odd), InvalidInput);
    MarchOptions late;
    late.snapshot_times = {2.0};
    CHECK_THROWS_AS(march_forward(phi, 1.0, 1e-6, SobolevIndex::certified(3), late), InvalidInput);

    MarchOptions capped;
    capped.norm_cap_factor = 0.5;
    CHECK_THROWS_AS(march_forward(phi, 0.01, 1e-6, SobolevIndex::certified(3), capped), NormCapExceeded);

    const auto huge = gaussian_profile(g, 1e6, 2.0, 0.0);
    CHECK_THROWS_AS(march_forward(huge, 1e-3, 1e-6, SobolevIndex::certified(3), cert), StepSelectionError);
}

TEST_CASE("negative time is the reflected forward solve", "[stepper]") {
    const GridSpec g(30.0, 128);
    const auto phi = RealGridFunction::sample(g, [](double x) { return 0.2 * x * std::exp(-x * x / 4.0); });
    MarchOptions opts;
    opts.fast_dt = 0.01;
    opts.snapshot_times = {-0.05, -0.02};
    const auto back = solve_ivp(phi, -0.05, 1e-10, SobolevIndex::certified(3), opts);
    MarchOptions fwd = opts;
    fwd.snapshot_times = {0.02, 0.05};
    const auto forward_ref = march_forward(reflect(phi), 0.05, 1e-10, SobolevIndex::certified(3), fwd);
    REQUIRE(back.times == std::vector<double>{-0.05, -0.02});
    CHECK(back.snapshots[0] == reflect(forward_ref.snapshots[1]));
    CHECK(back.snapshots[1] == reflect(forward_ref.snapshots[0]));

    // Odd data: reflect(phi) = -phi, so u(-t)(-x) = -u_{-phi}(t)(x) exactly per the construction.
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(back.snapshots[0][(g.size() - i) % g.size()] - forward_ref.snapshots[1][i]) <= 1e-10);
    }
}

TEST_CASE("a forward and backward round trip returns the data", "[stepper]") {
    const GridSpec g(30.0, 256);
    const auto phi = gaussian_profile(g, 0.5, 2.0, 0.0);
    MarchOptions opts;
    opts.fast_dt = 1e-3;
    const auto there = solve_ivp(phi, 0.2, 1e-9, SobolevIndex::certified(3), opts);
    const auto back = solve_ivp(there.snapshots.back(), -0.2, 1e-9, SobolevIndex::certified(3), opts);
    CHECK(sup_distance(back.snapshots.back(), phi) <= 2.0 * (there.ledger.total() + back.ledger.total()) + 1e-6);
}
