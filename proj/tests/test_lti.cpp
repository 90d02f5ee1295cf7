#include "iqcloc/error.hpp"
#include "iqcloc/lti.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace iqcloc;

namespace {

Mat s(double v) { return Mat::Constant(1, 1, v); }

StateSpace scalar_plant() {
    StateSpace p;
    p.A = s(-1);
    p.B1 = s(1);
    p.B2 = s(1);
    p.C1 = s(1);
    p.D11 = s(0);
    p.D12 = s(0);
    p.C2 = s(1);
    p.D21 = s(0);
    return p;
}

Signal constant_signal(double value, double dt, std::size_t len) {
    Signal sig;
    sig.dt = dt;
    sig.samples.assign(len, Vec::Constant(1, value));
    return sig;
}

StateSpace random_plant(std::mt19937& rng, int n, int nv, int nu, int ny, int nm) {
    using namespace iqcloc::testing;
    StateSpace p;
    p.A = random_matrix(rng, n, n);
    p.B1 = random_matrix(rng, n, nv);
    p.B2 = random_matrix(rng, n, nu);
    p.C1 = random_matrix(rng, ny, n);
    p.D11 = random_matrix(rng, ny, nv);
    p.D12 = random_matrix(rng, ny, nu);
    p.C2 = random_matrix(rng, nm, n);
    p.D21 = random_matrix(rng, nm, nv);
    return p;
}

}  // namespace

TEST_CASE("static output feedback on the scalar plant") {
    const ClosedLoop cl = close_loop(scalar_plant(), Controller{Mat(0, 0), Mat(0, 1), Mat(1, 0), s(-1)});
    CHECK(cl.A(0, 0) == -2.0);
    CHECK(cl.B(0, 0) == 1.0);
    CHECK(cl.C(0, 0) == 1.0);
    CHECK(cl.D(0, 0) == 0.0);
}

TEST_CASE("zero controller reproduces the open-loop channel") {
    std::mt19937 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const StateSpace p = random_plant(rng, 3, 2, 1, 2, 1);
        const ClosedLoop cl = close_loop(p, Controller::zero(1, 1));
        CHECK(cl.A == p.A);
        CHECK(cl.B == p.B1);
        CHECK(cl.C == p.C1);
        CHECK(cl.D == p.D11);
    }
}

TEST_CASE("dynamic controller matches symbolic composition") {
    // Independent oracle: stack plant and controller states and eliminate
    // u = Cc xc + Dc y_m, with xc' = Ac xc + Bc y_m.
    std::mt19937 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = iqcloc::testing::uniform_int(rng, 1, 3), nc = iqcloc::testing::uniform_int(rng, 1, 3);
        const StateSpace p = random_plant(rng, n, 2, 2, 1, 2);
        Controller k{iqcloc::testing::random_matrix(rng, nc, nc), iqcloc::testing::random_matrix(rng, nc, 2),
                     iqcloc::testing::random_matrix(rng, 2, nc), iqcloc::testing::random_matrix(rng, 2, 2)};
        const ClosedLoop cl = close_loop(p, k);
        const Vec x = iqcloc::testing::random_matrix(rng, n, 1);
        const Vec xc = iqcloc::testing::random_matrix(rng, nc, 1);
        const Vec v = iqcloc::testing::random_matrix(rng, 2, 1);
        const Vec ym = p.C2 * x + p.D21 * v;
        const Vec u = k.Cc * xc + k.Dc * ym;
        Vec state(n + nc);
        state << x, xc;
        Vec deriv(n + nc);
        deriv << p.A * x + p.B1 * v + p.B2 * u, k.Ac * xc + k.Bc * ym;
        const Vec y = p.C1 * x + p.D11 * v + p.D12 * u;
        CHECK(max_abs(cl.A * state + cl.B * v - deriv) < 1e-12);
        CHECK(max_abs(cl.C * state + cl.D * v - y) < 1e-12);
    }
}

TEST_CASE("close_loop rejects mismatched controllers") {
    CHECK_THROWS_AS(close_loop(scalar_plant(), Controller::zero(2, 1)), Error);
}

TEST_CASE("frequency oracle examples") {
    CHECK(freq_gain_oracle(ClosedLoop{s(-2), s(1), s(1), s(0)}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(freq_gain_oracle(ClosedLoop{s(-1), s(1), s(0), s(0)}) == 0.0);
    CHECK(freq_gain_oracle(ClosedLoop{s(-1), s(0), s(0), s(3)}) == doctest::Approx(3.0));
    try {
        freq_gain_oracle(ClosedLoop{s(1), s(1), s(1), s(0)});
        FAIL("expected Unstable");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Unstable);
    }
}

TEST_CASE("frequency oracle on a resonant system finds the peak") {
    // x'' + 0.2 x' + x = w: peak |G| = 1 / (2 zeta sqrt(1 - zeta^2)) with zeta = 0.1.
    Mat a(2, 2);
    a << 0, 1, -1, -0.2;
    Mat b(2, 1);
    b << 0, 1;
    Mat c(1, 2);
    c << 1, 0;
    const double zeta = 0.1;
    const double peak = 1.0 / (2 * zeta * std::sqrt(1 - zeta * zeta));
    std::vector<double> fine;
    for (int k = 0; k <= 20000; ++k) fine.push_back(0.9 + 0.2 * k / 20000.0);
    CHECK(freq_gain_oracle(ClosedLoop{a, b, c, s(0)}, fine) == doctest::Approx(peak).epsilon(1e-6));
}

TEST_CASE("simulation examples") {
    const ClosedLoop sys{s(-1), s(1), s(1), s(0)};
    const Trajectory zero = simulate(sys, constant_signal(0.0, 0.01, 100));
    for (const auto& x : zero.states.samples) CHECK(x.norm() == 0.0);
    for (const auto& y : zero.outputs.samples) CHECK(y.norm() == 0.0);

    const Trajectory step = simulate(sys, constant_signal(1.0, 0.01, 2001));
    CHECK(std::abs(step.states.samples.back()(0) - (1.0 - std::exp(-20.0))) < 1e-4);
    CHECK(std::abs(step.states.samples[100](0) - (1.0 - std::exp(-1.0))) < 1e-8);
}

TEST_CASE("coarse input sampling is substepped") {
    const ClosedLoop sys{s(-50), s(50), s(1), s(0)};
    const Trajectory traj = simulate(sys, constant_signal(1.0, 0.5, 5));
    CHECK(std::abs(traj.states.samples.back()(0) - 1.0) < 1e-6);
    CHECK(default_step(sys) == doctest::Approx(0.002));
}

TEST_CASE("simulated energy gain stays below the frequency oracle") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = iqcloc::testing::uniform_int(rng, 1, 3);
        const ClosedLoop sys{iqcloc::testing::random_hurwitz(rng, n, 0.3), iqcloc::testing::random_matrix(rng, n, 1),
                             iqcloc::testing::random_matrix(rng, 1, n), iqcloc::testing::random_matrix(rng, 1, 1)};
        const double gamma = freq_gain_oracle(sys);
        Signal w;
        w.dt = 0.01;
        std::normal_distribution<double> nd(0.0, 1.0);
        // Random smooth burst followed by silence so the output energy drains.
        double phase = nd(rng), f = std::abs(nd(rng)) + 0.2;
        for (int k = 0; k < 3000; ++k) {
            const double t = k * w.dt;
            w.samples.push_back(Vec::Constant(1, t < 10 ? std::sin(f * t + phase) + 0.3 * nd(rng) : 0.0));
        }
        const Trajectory traj = simulate(sys, w);
        const double ratio = std::sqrt(traj.outputs.energy() / w.energy());
        CHECK(ratio <= gamma * 1.02);
    }
}
